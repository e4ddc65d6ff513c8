#pragma once

// Adaptive 15-point Gauss-Kronrod quadrature on a finite interval.

#include <array>
#include <cmath>
#include <limits>

#include "blowup/errors.hpp"

namespace blowup {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
};

namespace detail {

// Kronrod abscissae (non-negative half) and weights; odd indices are the Gauss nodes.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class Fn>
QuadResult gk15(const Fn& f, double lo, double hi)
{
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += kWgk[j] * sum;
        if (j % 2 == 1) gauss += kWg[j / 2] * sum;
    }
    return {kronrod * half, std::abs((kronrod - gauss) * half), 15};
}

template <class Fn>
QuadResult adapt(const Fn& f, double lo, double hi, const QuadResult& whole, double abs_tol,
                 double rel_tol, int depth)
{
    if (whole.error <= std::max(abs_tol, rel_tol * std::abs(whole.value)) ||
        whole.error <= 50.0 * std::numeric_limits<double>::epsilon() * std::abs(whole.value))
        return whole;
    if (depth >= 60)
        throw NumericalError("adaptive quadrature did not converge");
    const double mid = 0.5 * (lo + hi);
    const QuadResult left = gk15(f, lo, mid);
    const QuadResult right = gk15(f, mid, hi);
    // Each half gets the full relative tolerance but half the absolute budget.
    const QuadResult l = adapt(f, lo, mid, left, 0.5 * abs_tol, rel_tol, depth + 1);
    const QuadResult r = adapt(f, mid, hi, right, 0.5 * abs_tol, rel_tol, depth + 1);
    return {l.value + r.value, l.error + r.error, whole.evaluations + l.evaluations + r.evaluations};
}

} // namespace detail

/// Integrates `f` over [lo, hi] by recursive bisection until the Gauss/Kronrod
/// discrepancy of every panel is below max(abs_tol, rel_tol * |panel|).
/// Throws NumericalError when the recursion depth is exhausted.
template <class Fn>
QuadResult integrate_adaptive(const Fn& f, double lo, double hi, double rel_tol = 1e-10,
                              double abs_tol = 0.0)
{
    if (lo == hi) return {};
    if (hi < lo) {
        QuadResult r = integrate_adaptive(f, hi, lo, rel_tol, abs_tol);
        r.value = -r.value;
        return r;
    }
    const QuadResult whole = detail::gk15(f, lo, hi);
    return detail::adapt(f, lo, hi, whole, abs_tol, rel_tol, 0);
}

} // namespace blowup
