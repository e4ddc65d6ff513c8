#pragma once

// Equation parameters, the log-perturbed source and its antiderivative.
//
//   d_tt u = Laplacian(u) + |u|^{p-1} u + f(u),   f(u) = |u|^p / (log(2 + u^2))^a
//
// The pure power part of the potential, |u|^{p+1}/(p+1), belongs to E0; only the
// perturbation potential F(u) = int_0^u f enters I.  Keep the two separate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/integrate.hpp"

namespace blowup {

struct ModelParams {
    double p = 3.0;        ///< power exponent, > 1 (and subconformal when N >= 2)
    double a = 2.0;        ///< log exponent, > 1
    double M = 1.0;        ///< bound used by check_Hf only
    int N = 1;             ///< space dimension
    bool perturbed = true; ///< switches f on/off
};

struct DerivedConstants {
    double kappa = 0.0; ///< ODE profile amplitude ((2p+2)/(p-1)^2)^{1/(p-1)}
    double alpha = 0.0; ///< weight exponent 2/(p-1) - (N-1)/2
    double b = 0.0;     ///< J decay exponent (a+1)/2
    double p_c = std::numeric_limits<double>::infinity();
    bool subconformal = true;
};

inline void validate(const ModelParams& m)
{
    if (!(m.p > 1.0)) throw ConfigError("model: p must be > 1");
    if (!(m.a > 1.0)) throw ConfigError("model: a must be > 1");
    if (!(m.M > 0.0)) throw ConfigError("model: M must be > 0");
    if (m.N < 1) throw ConfigError("model: N must be >= 1");
    if (m.N >= 2 && !(m.p < 1.0 + 4.0 / (m.N - 1)))
        throw ConfigError("model: p must be below the conformal exponent 1 + 4/(N-1)");
}

inline DerivedConstants derive_constants(const ModelParams& m)
{
    DerivedConstants c;
    const double pm1 = m.p - 1.0;
    c.kappa = std::pow((2.0 * m.p + 2.0) / (pm1 * pm1), 1.0 / pm1);
    c.alpha = 2.0 / pm1 - 0.5 * (m.N - 1);
    c.b = 0.5 * (m.a + 1.0);
    c.p_c = m.N >= 2 ? 1.0 + 4.0 / (m.N - 1) : std::numeric_limits<double>::infinity();
    c.subconformal = m.p < c.p_c;
    return c;
}

/// log(2 + u^2) without overflowing u^2.
inline double log_factor(double u)
{
    const double au = std::abs(u);
    if (au < 1e150) return std::log(2.0 + au * au);
    return 2.0 * std::log(au) + std::log1p(2.0 / (au * au));
}

/// The built-in perturbation f(u) = |u|^p / (log(2+u^2))^a, even and non-negative.
inline double perturbation(double u, double p, double a)
{
    const double au = std::abs(u);
    if (au == 0.0) return 0.0;
    return std::pow(au, p) / std::pow(log_factor(au), a);
}

inline double perturbation(double u, const ModelParams& m)
{
    return m.perturbed ? perturbation(u, m.p, m.a) : 0.0;
}

/// x^e for x >= 0, with the common small exponents done by multiplication.
inline double power_of(double x, double e)
{
    if (e == 2.0) return x * x;
    if (e == 3.0) return x * x * x;
    if (e == 1.5) return x * std::sqrt(x);
    if (e == 1.0) return x;
    return std::pow(x, e);
}

/// |u|^{p-1} u + f(u).  A non-finite return value is the saturation signal: the
/// caller has reached the blow-up threshold of double precision.
inline double source_term(double u, const ModelParams& m)
{
    const double au = std::abs(u);
    if (au == 0.0) return 0.0;
    const double power = power_of(au, m.p);
    if (!std::isfinite(power)) return std::copysign(std::numeric_limits<double>::infinity(), u);
    const double main = std::copysign(power, u);
    if (!m.perturbed) return main;
    return main + power / power_of(log_factor(au), m.a);
}

inline bool is_saturated(double value) { return !std::isfinite(value); }

namespace detail {

// Exponent codes: 2, 3 and 15 (= 1.5) multiply out, 0 falls back to pow.
template <int Code>
double small_power(double x, double e)
{
    if constexpr (Code == 2) return x * x;
    else if constexpr (Code == 3) return x * x * x;
    else if constexpr (Code == 15) return x * std::sqrt(x);
    else return std::pow(x, e);
}

} // namespace detail

/// source_term specialised on the exponents, for inner loops.  A non-finite
/// value (inf or nan) signals saturation.
template <int PCode, int ACode>
struct SourceKernel {
    double p;
    double a;

    double operator()(double u) const
    {
        const double au = std::abs(u);
        const double power = detail::small_power<PCode>(au, p);
        const double main = std::copysign(power, u);
        if constexpr (ACode < 0) return main;
        else return main + power / detail::small_power<ACode>(log_factor(au), a);
    }
};

/// Calls fn with the SourceKernel matching m; the result of fn is returned.
template <class Fn>
decltype(auto) visit_source(const ModelParams& m, Fn&& fn)
{
    auto by_a = [&]<int P>() -> decltype(auto) {
        if (!m.perturbed) return fn(SourceKernel<P, -1>{m.p, m.a});
        if (m.a == 2.0) return fn(SourceKernel<P, 2>{m.p, m.a});
        if (m.a == 1.5) return fn(SourceKernel<P, 15>{m.p, m.a});
        return fn(SourceKernel<P, 0>{m.p, m.a});
    };
    if (m.p == 3.0) return by_a.template operator()<3>();
    if (m.p == 2.0) return by_a.template operator()<2>();
    return by_a.template operator()<0>();
}

namespace detail {

// Leading two terms of F near zero: (ln 2)^{-a} (u^{p+1}/(p+1) - a u^{p+3} / (2 ln2 (p+3))).
inline double potential_series(double u, double p, double a)
{
    const double ln2 = std::numbers::ln2;
    return std::pow(ln2, -a) *
           (std::pow(u, p + 1.0) / (p + 1.0) - a * std::pow(u, p + 3.0) / (2.0 * ln2 * (p + 3.0)));
}

} // namespace detail

/// F(u) = int_0^u f(v) dv for the perturbation alone, by adaptive Gauss-Kronrod
/// quadrature.  F is odd because f is even.  Returns 0 when f is switched off.
inline double F_antiderivative(double u, const ModelParams& m, double rel_tol = 1e-10)
{
    if (!m.perturbed || u == 0.0) return 0.0;
    const double au = std::abs(u);
    const auto f = [&](double v) { return perturbation(v, m.p, m.a); };
    const double value = integrate_adaptive(f, 0.0, au, rel_tol).value;
    return std::copysign(value, u);
}

/// Immutable lookup table for F: 1024 log-spaced abscissae with Hermite
/// interpolation of log F against log u, a two-term series below the table and
/// direct quadrature above it.  The first two derivatives of log F in log u are
/// known in closed form from f, so the interpolant is the quintic Hermite one.
class PotentialTable {
public:
    static constexpr std::size_t kNodes = 1024;

    PotentialTable() = default;

    explicit PotentialTable(const ModelParams& m) : p_(m.p), a_(m.a), enabled_(m.perturbed)
    {
        if (!enabled_) return;
        x_lo_ = std::log(1e-6);
        // Keep F(u_hi) ~ u_hi^{p+1} well inside double range.
        x_hi_ = std::min(std::log(1e30), 690.0 / (p_ + 1.0));
        h_ = (x_hi_ - x_lo_) / double(kNodes - 1);
        logF_.resize(kNodes);
        dlogF_.resize(kNodes);
        d2logF_.resize(kNodes);
        const auto f = [&](double v) { return perturbation(v, p_, a_); };
        double u_prev = std::exp(x_lo_);
        double F = detail::potential_series(u_prev, p_, a_);
        for (std::size_t i = 0; i < kNodes; ++i) {
            const double u = std::exp(x_lo_ + h_ * double(i));
            if (i > 0) F += integrate_adaptive(f, u_prev, u, 1e-13).value;
            logF_[i] = std::log(F);
            const double q = u * f(u) / F;
            const double elasticity = p_ - 2.0 * a_ * u * u / ((2.0 + u * u) * log_factor(u));
            dlogF_[i] = q;
            d2logF_[i] = q * (1.0 + elasticity - q);
            u_prev = u;
        }
        F_hi_ = F;
        u_lo_ = std::exp(x_lo_);
        u_hi_ = u_prev;
    }

    double operator()(double u) const
    {
        if (!enabled_ || u == 0.0) return 0.0;
        const double au = std::abs(u);
        double value;
        if (au <= u_lo_) {
            value = detail::potential_series(au, p_, a_);
        } else if (au >= u_hi_) {
            const auto f = [&](double v) { return perturbation(v, p_, a_); };
            value = F_hi_ + integrate_adaptive(f, u_hi_, au, 1e-12).value;
        } else {
            const double x = std::log(au);
            const double pos = (x - x_lo_) / h_;
            auto i = static_cast<std::size_t>(pos);
            if (i >= kNodes - 1) i = kNodes - 2;
            const double t = pos - double(i);
            const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
            const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
            const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
            const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
            const double k0 = 10 * t3 - 15 * t4 + 6 * t5;
            const double k1 = -4 * t3 + 7 * t4 - 3 * t5;
            const double k2 = 0.5 * (t3 - 2 * t4 + t5);
            const double hh = h_ * h_;
            const double g = h0 * logF_[i] + h1 * h_ * dlogF_[i] + h2 * hh * d2logF_[i] +
                             k0 * logF_[i + 1] + k1 * h_ * dlogF_[i + 1] + k2 * hh * d2logF_[i + 1];
            value = std::exp(g);
        }
        return std::copysign(value, u);
    }

    double u_lo() const { return u_lo_; }
    double u_hi() const { return u_hi_; }

private:
    double p_ = 3.0, a_ = 2.0;
    bool enabled_ = false;
    double x_lo_ = 0.0, x_hi_ = 0.0, h_ = 1.0;
    double u_lo_ = 0.0, u_hi_ = 0.0, F_hi_ = 0.0;
    std::vector<double> logF_, dlogF_, d2logF_;
};

/// Validated parameters bundled with their derived constants and the F table.
/// Immutable after construction; share by const reference across threads.
class Model {
public:
    explicit Model(const ModelParams& params)
        : params_((validate(params), params)), constants_(derive_constants(params)),
          potential_(params)
    {}

    const ModelParams& params() const { return params_; }
    const DerivedConstants& constants() const { return constants_; }

    double p() const { return params_.p; }
    double a() const { return params_.a; }
    int N() const { return params_.N; }
    bool perturbed() const { return params_.perturbed; }
    double kappa() const { return constants_.kappa; }
    double alpha() const { return constants_.alpha; }
    double b() const { return constants_.b; }
    /// 2/(p-1), the blow-up rate exponent.
    double beta() const { return 2.0 / (params_.p - 1.0); }

    double f(double u) const { return perturbation(u, params_); }
    double source(double u) const { return source_term(u, params_); }
    double F(double u) const { return potential_(u); }

private:
    ModelParams params_;
    DerivedConstants constants_;
    PotentialTable potential_;
};

struct HfCheck {
    bool holds = true;
    double worst_ratio = 0.0; ///< max over samples of |f(x)| / (M (1 + |x|^p / log(2+x^2)^a))
    double worst_at = 0.0;
};

/// Checks the growth hypothesis |f(x)| <= M (1 + |x|^p / (log(2+x^2))^a) on samples.
template <class Fn>
HfCheck check_Hf(const ModelParams& m, const Fn& f, std::span<const double> samples)
{
    if (samples.empty()) throw ConfigError("check_Hf: empty sample list");
    HfCheck out;
    out.worst_at = samples.front();
    for (double x : samples) {
        const double bound = m.M * (1.0 + perturbation(x, m.p, m.a));
        const double ratio = std::abs(f(x)) / bound;
        if (ratio > out.worst_ratio) {
            out.worst_ratio = ratio;
            out.worst_at = x;
        }
        if (ratio > 1.0) out.holds = false;
    }
    return out;
}

inline HfCheck check_Hf(const ModelParams& m, std::span<const double> samples)
{
    return check_Hf(m, [&](double x) { return perturbation(x, m); }, samples);
}

} // namespace blowup
