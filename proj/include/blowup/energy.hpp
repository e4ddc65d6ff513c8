#pragma once

// Weighted functionals of (w, d_s w) on the unit ball.

#include <cmath>
#include <concepts>
#include <filesystem>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/io.hpp"
#include "blowup/model.hpp"
#include "blowup/quadrature.hpp"
#include "blowup/similarity.hpp"

namespace blowup {

template <class S>
concept BallSampler = requires(const S& sm, double y) {
    { sm(y) } -> std::convertible_to<WPoint>;
    { sm.s() } -> std::convertible_to<double>;
    { sm.kind() } -> std::convertible_to<BallKind>;
    { sm.N() } -> std::convertible_to<int>;
};

/// One rule per weight exponent: rho = (1-|y|^2)^alpha, rho/(1-|y|^2), and flat.
struct QuadSet {
    QuadRule rho;
    QuadRule rho_edge;
    QuadRule flat;

    static QuadSet make(const Model& model, std::size_t n = 64, BallKind kind = BallKind::line)
    {
        const int N = kind == BallKind::radial ? model.N() : 1;
        const double alpha = model.alpha();
        return {jacobi_quad(n, alpha, kind, N), jacobi_quad(n, alpha - 1.0, kind, N), jacobi_quad(n, 0.0, kind, N)};
    }

    BallKind kind() const { return rho.kind; }
};

struct EnergyReport {
    double s = 0.0;
    double E0 = 0.0;
    double I = 0.0;
    double J = 0.0;
    double E = 0.0;
    double H = 0.0;
    double D = 0.0;
    double sigma01 = 0.0;
    double sigma02 = 0.0;
    double lp1 = 0.0;
    double h1_norm = 0.0;
    double l2_ws = 0.0;
    double theta_used = 0.0;

    double sigma0() const { return sigma01 + sigma02; }
};

/// The four pieces of E0: kinetic, gradient (with the (y.grad w)^2 correction),
/// quadratic mass term and the |w|^{p+1} potential.
struct E0Terms {
    double kinetic = 0.0;
    double gradient = 0.0;
    double mass = 0.0;
    double potential = 0.0;

    double total() const { return kinetic + gradient + mass - potential; }
};

namespace detail {

template <BallSampler S>
void check_kind(const S& sm, const QuadSet& q)
{
    if (sm.kind() != q.kind()) throw ConfigError("energy: sampler and quadrature disagree on ball kind");
}

// e^{-2(p+1)s/(p-1)}, the prefactor of I.
inline double potential_scale(const Model& m, double s) { return std::exp(-2.0 * (m.p() + 1.0) * s / (m.p() - 1.0)); }

} // namespace detail

template <BallSampler S>
E0Terms compute_E0_terms(const S& sm, const Model& model, const QuadSet& q)
{
    detail::check_kind(sm, q);
    const double p = model.p();
    const double c = (p + 1.0) / ((p - 1.0) * (p - 1.0));
    E0Terms t;
    const auto& r = q.rho;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double y = r.nodes[i], wt = r.weights[i];
        const WPoint v = sm(y);
        t.kinetic += wt * 0.5 * v.ws * v.ws;
        t.gradient += wt * 0.5 * v.wy * v.wy * (1.0 - y * y);
        t.mass += wt * c * v.w * v.w;
        t.potential += wt * std::pow(std::abs(v.w), p + 1.0) / (p + 1.0);
    }
    return t;
}

template <BallSampler S>
double compute_E0(const S& sm, const Model& model, const QuadSet& q)
{
    return compute_E0_terms(sm, model, q).total();
}

/// I = -e^{-2(p+1)s/(p-1)} int F(e^{2s/(p-1)} w) rho.
template <BallSampler S>
double compute_I(const S& sm, const Model& model, const QuadSet& q)
{
    detail::check_kind(sm, q);
    if (!model.perturbed()) return 0.0;
    const double s = sm.s();
    const double grow = std::exp(model.beta() * s);
    const double sum = q.rho.integrate([&](double y) { return model.F(grow * sm(y).w); });
    return -detail::potential_scale(model, s) * sum;
}

/// J = -s^{-b} int w d_s w rho.
template <BallSampler S>
double compute_J(const S& sm, const Model& model, const QuadSet& q)
{
    detail::check_kind(sm, q);
    const double s = sm.s();
    if (!(s > 0.0)) throw ConfigError("J needs s > 0; move the frame so that -log T0 > 0");
    const double sum = q.rho.integrate([&](double y) {
        const WPoint v = sm(y);
        return v.w * v.ws;
    });
    return -sum / std::pow(s, model.b());
}

/// Dissipation int (d_s w)^2 rho / (1 - |y|^2).
template <BallSampler S>
double compute_D(const S& sm, const QuadSet& q)
{
    detail::check_kind(sm, q);
    return q.rho_edge.integrate([&](double y) {
        const double ws = sm(y).ws;
        return ws * ws;
    });
}

struct Sigma0 {
    double part1 = 0.0;
    double part2 = 0.0;
    double total() const { return part1 + part2; }
};

template <BallSampler S>
Sigma0 compute_sigma0(const S& sm, const Model& model, const QuadSet& q)
{
    detail::check_kind(sm, q);
    if (!model.perturbed()) return {};
    const double p = model.p(), s = sm.s();
    const double grow = std::exp(model.beta() * s);
    double sF = 0.0, sf = 0.0;
    const auto& r = q.rho;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double w = sm(r.nodes[i]).w;
        sF += r.weights[i] * model.F(grow * w);
        sf += r.weights[i] * model.f(grow * w) * w;
    }
    Sigma0 out;
    out.part1 = 2.0 * (p + 1.0) / (p - 1.0) * detail::potential_scale(model, s) * sF;
    out.part2 = -2.0 / (p - 1.0) * std::exp(-2.0 * p * s / (p - 1.0)) * sf;
    return out;
}

template <BallSampler S>
double compute_lp1(const S& sm, const Model& model, const QuadSet& q)
{
    detail::check_kind(sm, q);
    return q.rho.integrate([&](double y) { return std::pow(std::abs(sm(y).w), model.p() + 1.0); });
}

/// Unweighted H^1(B) norm of w and L^2(B) norm of d_s w.
template <BallSampler S>
std::pair<double, double> compute_flat_norms(const S& sm, const QuadSet& q)
{
    detail::check_kind(sm, q);
    double h1 = 0.0, l2 = 0.0;
    const auto& r = q.flat;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const WPoint v = sm(r.nodes[i]);
        h1 += r.weights[i] * (v.w * v.w + v.wy * v.wy);
        l2 += r.weights[i] * v.ws * v.ws;
    }
    return {std::sqrt(h1), std::sqrt(l2)};
}

/// exp((p+3)/((a-1) s^{b-1})), the factor multiplying E in H.
inline double h_factor(const Model& model, double s)
{
    return std::exp((model.p() + 3.0) / ((model.a() - 1.0) * std::pow(s, model.b() - 1.0)));
}

/// Recomputes H for another theta; everything else in the report is theta-free.
inline EnergyReport with_theta(EnergyReport r, const Model& model, double theta)
{
    r.theta_used = theta;
    r.H = h_factor(model, r.s) * r.E + theta * std::exp(-(model.p() + 1.0) * r.s / (model.p() - 1.0));
    return r;
}

template <BallSampler S>
EnergyReport compute_H(const S& sm, const Model& model, const QuadSet& q, double theta)
{
    EnergyReport r;
    r.s = sm.s();
    if (!(r.s >= 1.0)) throw ConfigError("energy report needs s >= 1; start snapshots at t >= T0 - 1/e");
    r.E0 = compute_E0(sm, model, q);
    r.I = compute_I(sm, model, q);
    r.J = compute_J(sm, model, q);
    r.E = r.E0 + r.I + r.J;
    r.D = compute_D(sm, q);
    const Sigma0 sig = compute_sigma0(sm, model, q);
    r.sigma01 = sig.part1;
    r.sigma02 = sig.part2;
    r.lp1 = compute_lp1(sm, model, q);
    std::tie(r.h1_norm, r.l2_ws) = compute_flat_norms(sm, q);
    return with_theta(r, model, theta);
}

inline EnergyReport compute_H(const WState& st, const Model& model, const QuadSet& q, double theta)
{
    return compute_H(GridBallSampler(st), model, q, theta);
}

/// Discrete form of d/ds (E0 + I) = -2 alpha D + Sigma0 over [r1.s, r2.s] with
/// D and Sigma0 taken at the midpoint.
inline double identity_residual(const EnergyReport& r1, const EnergyReport& r2, double D_mid, double sigma_mid,
                                const Model& model)
{
    const double ds = r2.s - r1.s;
    if (!(ds > 0.0)) throw ConfigError("identity_residual: reports must be increasing in s");
    return ((r2.E0 + r2.I) - (r1.E0 + r1.I)) / ds + 2.0 * model.alpha() * D_mid - sigma_mid;
}

/// Smallest C with Sigma0 <= C e^{-(p+1)s/(p-1)} + C s^{-a} lp1 at this report.
inline double sigma0_bound_check(const EnergyReport& r, const Model& model)
{
    const double sigma = r.sigma0();
    if (sigma <= 0.0) return 0.0;
    const double denom = std::exp(-(model.p() + 1.0) * r.s / (model.p() - 1.0)) + r.lp1 / std::pow(r.s, model.a());
    return sigma / denom;
}

/// int w^2 |y|^2 rho/(1-|y|^2)  /  (int |grad w|^2 rho (1-|y|^2) + int w^2 rho); 0 for w = 0.
template <BallSampler S>
double hardy_ratio(const S& sm, const QuadSet& q)
{
    detail::check_kind(sm, q);
    const double num = q.rho_edge.integrate([&](double y) {
        const double w = sm(y).w;
        return w * w * y * y;
    });
    const double den = q.rho.integrate([&](double y) {
        const WPoint v = sm(y);
        return v.wy * v.wy * (1.0 - y * y) + v.w * v.w;
    });
    return den > 0.0 ? num / den : 0.0;
}

/// Trapezoid mean of lp1 over [s, s + 1], s the first report.
inline double lp1_time_average(std::span<const EnergyReport> reports)
{
    if (reports.size() < 2) throw ConfigError("lp1 average: need at least two reports");
    const double s0 = reports.front().s;
    const double ds = reports[1].s - s0;
    if (!(ds > 0.0)) throw ConfigError("lp1 average: reports must increase in s");
    const std::size_t steps = static_cast<std::size_t>(std::llround(1.0 / ds));
    if (std::abs(double(steps) * ds - 1.0) > 1e-6 || reports.size() < steps + 1)
        throw ConfigError("lp1 average: reports do not cover a unit s-window with uniform spacing");
    double sum = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        if (k > 0 && std::abs(reports[k].s - reports[k - 1].s - ds) > 1e-6 * ds)
            throw ConfigError("lp1 average: non-uniform spacing");
        sum += (k == 0 || k == steps ? 0.5 : 1.0) * reports[k].lp1;
    }
    return sum * ds;
}

inline void write_energy_csv(const std::filesystem::path& path, std::span<const EnergyReport> reports)
{
    std::vector<std::vector<double>> cols(13);
    for (const auto& r : reports) {
        const double row[] = {r.s, r.E0, r.I, r.J, r.E, r.H, r.D, r.sigma01, r.sigma02, r.lp1, r.h1_norm, r.l2_ws, r.theta_used};
        for (std::size_t c = 0; c < cols.size(); ++c) cols[c].push_back(row[c]);
    }
    io::write_csv(path, {"s", "E0", "I", "J", "E", "H", "D", "sigma01", "sigma02", "lp1", "h1_norm", "l2_ws", "theta"},
                  cols);
}

} // namespace blowup
