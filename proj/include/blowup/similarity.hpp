#pragma once

// Similarity variables y = (x - x0)/(T0 - t), s = -log(T0 - t),
// w = (T0 - t)^{2/(p-1)} u, and the transformed equation for w on the unit ball.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/interp.hpp"
#include "blowup/io.hpp"
#include "blowup/model.hpp"
#include "blowup/quadrature.hpp"
#include "blowup/wave_solver.hpp"

namespace blowup {

struct SimilarityFrame {
    double x0 = 0.0;
    double T0 = 1.0;
};

/// Values on a uniform ball grid: y in [-(1-eta), 1-eta] (line) or r in [0, 1-eta] (radial).
struct WState {
    double s = 0.0;
    std::vector<double> y;
    std::vector<double> w;
    std::vector<double> ws;
    std::optional<std::vector<double>> wy;
    SimilarityFrame frame;
    BallKind kind = BallKind::line;
    int N = 1;

    std::size_t size() const { return y.size(); }
    double h() const { return y[1] - y[0]; }
};

/// A point value of (w, grad w, d_s w); in radial mode wy is the radial derivative.
struct WPoint {
    double w = 0.0;
    double wy = 0.0;
    double ws = 0.0;
};

inline std::vector<double> ball_nodes(std::size_t n, double eta, BallKind kind = BallKind::line)
{
    if (n < 5) throw ConfigError("ball grid needs at least 5 nodes");
    if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("eta must lie in (0, 1)");
    std::vector<double> y(n);
    const double edge = 1.0 - eta;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = double(i) / double(n - 1);
        y[i] = kind == BallKind::line ? -edge + 2.0 * edge * u : edge * u;
    }
    return y;
}

/// Reads (w, grad w, d_s w) at ball position y straight from a physical snapshot.
/// Covers the whole ball; the snapshot must contain |x - x0| <= T0 - t.
class PhysicalBallSampler {
public:
    PhysicalBallSampler(const Snapshot& snap, const SimilarityFrame& frame, const Model& model)
        : snap_(&snap), frame_(frame), beta_(model.beta())
    {
        tau_ = frame.T0 - snap.state.t;
        if (!(tau_ > 0.0)) throw ConfigError("similarity: snapshot time must precede T0");
        if (snap.grid.kind == BallKind::radial && frame.x0 != 0.0)
            throw ConfigError("similarity: radial frames must be centred at the origin");
        const double lo = frame.x0 - tau_, hi = frame.x0 + tau_;
        const double eps = 1e-12 * std::max(1.0, std::abs(frame.x0));
        if (snap.grid.kind == BallKind::line && (lo < snap.grid.x_min - eps || hi > snap.grid.x_max() + eps))
            throw ConfigError("similarity: ball maps outside the snapshot domain");
        if (snap.grid.kind == BallKind::radial && tau_ > snap.grid.x_max() + eps)
            throw ConfigError("similarity: ball maps outside the snapshot domain");
        scale_w_ = std::pow(tau_, beta_);
        scale_d_ = scale_w_ * tau_;
    }

    double s() const { return -std::log(tau_); }
    double tau() const { return tau_; }
    BallKind kind() const { return snap_->grid.kind; }
    int N() const { return snap_->grid.N; }

    WPoint operator()(double y) const
    {
        const auto& g = snap_->grid;
        const EdgeRule edge = g.kind == BallKind::radial ? EdgeRule::mirror : EdgeRule::clamp;
        const double x = frame_.x0 + y * tau_;
        const auto u = cubic_sample(snap_->state.u, g.x_min, g.dx, x, edge);
        const auto ut = cubic_sample(snap_->state.ut, g.x_min, g.dx, x, edge);
        WPoint p;
        p.w = scale_w_ * u.value;
        p.wy = scale_d_ * u.derivative;
        p.ws = -beta_ * p.w - y * p.wy + scale_d_ * ut.value;
        return p;
    }

private:
    const Snapshot* snap_;
    SimilarityFrame frame_;
    double beta_;
    double tau_ = 1.0, scale_w_ = 1.0, scale_d_ = 1.0;
};

/// Samples a WState by cubic interpolation on its ball grid.  Positions beyond
/// |y| = 1 - eta are reached by extrapolating the edge stencil, which supplies the
/// boundary layer for integrals over the whole ball.
class GridBallSampler {
public:
    explicit GridBallSampler(const WState& st) : st_(&st)
    {
        if (st.size() < 4) throw ConfigError("similarity: ball grid too small");
    }

    double s() const { return st_->s; }
    BallKind kind() const { return st_->kind; }
    int N() const { return st_->N; }

    WPoint operator()(double y) const
    {
        const EdgeRule edge = st_->kind == BallKind::radial ? EdgeRule::mirror : EdgeRule::clamp;
        const double y0 = st_->y.front(), h = st_->h();
        const auto w = cubic_sample(st_->w, y0, h, y, edge);
        const auto ws = cubic_sample(st_->ws, y0, h, y, edge);
        return {w.value, w.derivative, ws.value};
    }

private:
    const WState* st_;
};

/// Transforms a physical snapshot to similarity variables on the given ball nodes.
inline WState to_similarity(const Snapshot& snap, const SimilarityFrame& frame, const Model& model,
                            std::span<const double> y_nodes)
{
    const PhysicalBallSampler sampler(snap, frame, model);
    WState out;
    out.s = sampler.s();
    out.frame = frame;
    out.kind = snap.grid.kind;
    out.N = snap.grid.N;
    out.y.assign(y_nodes.begin(), y_nodes.end());
    out.w.resize(y_nodes.size());
    out.ws.resize(y_nodes.size());
    std::vector<double> wy(y_nodes.size());
    for (std::size_t i = 0; i < y_nodes.size(); ++i) {
        const double y = y_nodes[i];
        if (!(std::abs(y) < 1.0)) throw ConfigError("similarity: ball nodes must satisfy |y| < 1");
        const WPoint p = sampler(y);
        out.w[i] = p.w;
        out.ws[i] = p.ws;
        wy[i] = p.wy;
    }
    out.wy = std::move(wy);
    return out;
}

namespace detail {

// First and second derivatives on a uniform grid: central inside, second-order
// one-sided at the ends (mirror symmetry at r = 0 in radial mode).
inline void grid_derivatives(std::span<const double> f, double h, bool radial, std::vector<double>& d1,
                             std::vector<double>& d2)
{
    const std::size_t n = f.size();
    d1.assign(n, 0.0);
    d2.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d1[i] = (f[i + 1] - f[i - 1]) / (2 * h);
        d2[i] = (f[i + 1] - 2 * f[i] + f[i - 1]) / (h * h);
    }
    const std::size_t e = n - 1;
    d1[e] = (3 * f[e] - 4 * f[e - 1] + f[e - 2]) / (2 * h);
    d2[e] = (2 * f[e] - 5 * f[e - 1] + 4 * f[e - 2] - f[e - 3]) / (h * h);
    if (radial) {
        d1[0] = 0.0;
        d2[0] = 2 * (f[1] - f[0]) / (h * h);
    } else {
        d1[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h);
        d2[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / (h * h);
    }
}

} // namespace detail

/// Right-hand side of the w equation,
///   d_ss w = (1/rho) div(rho grad w - rho (y.grad w) y) - 2(p+1)/(p-1)^2 w + |w|^{p-1} w
///            - (p+3)/(p-1) d_s w - 2 y.grad d_s w + e^{-2ps/(p-1)} f(e^{2s/(p-1)} w),
/// evaluated with grid derivatives.
inline std::vector<double> w_equation_rhs(const Model& model, double s, std::span<const double> y,
                                          std::span<const double> w, std::span<const double> ws,
                                          BallKind kind, int N)
{
    const std::size_t n = y.size();
    const double h = y[1] - y[0];
    const bool radial = kind == BallKind::radial;
    const double p = model.p(), pm1 = p - 1.0, alpha = model.alpha();
    const double lin = 2.0 * (p + 1.0) / (pm1 * pm1);
    const double damp = (p + 3.0) / pm1;
    const double grow = std::exp(2.0 * s / pm1);
    const double decay = std::exp(-2.0 * p * s / pm1);
    std::vector<double> wy, wyy, vy, vyy;
    detail::grid_derivatives(w, h, radial, wy, wyy);
    detail::grid_derivatives(ws, h, radial, vy, vyy);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double yi = y[i];
        const double one_m = 1.0 - yi * yi;
        double Lw;
        if (radial && yi == 0.0)
            Lw = double(N) * wyy[i];
        else if (radial)
            Lw = one_m * wyy[i] + wy[i] * (double(N - 1) * one_m / yi - 2.0 * (alpha + 1.0) * yi);
        else
            Lw = one_m * wyy[i] - 2.0 * (alpha + 1.0) * yi * wy[i];
        const double power = std::copysign(std::pow(std::abs(w[i]), p), w[i]);
        const double pert = model.perturbed() ? decay * model.f(grow * w[i]) : 0.0;
        out[i] = Lw - lin * w[i] + power - damp * ws[i] - 2.0 * yi * vy[i] + pert;
    }
    return out;
}

/// rho-weighted L2 norm over the stored nodes (trapezoid; radial adds |S^{N-1}| r^{N-1}).
inline double weighted_l2(std::span<const double> y, std::span<const double> v, double alpha, BallKind kind, int N)
{
    const std::size_t n = y.size();
    const double h = y[1] - y[0];
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double wgt = std::pow(1.0 - y[i] * y[i], alpha) * ((i == 0 || i + 1 == n) ? 0.5 : 1.0);
        if (kind == BallKind::radial) wgt *= sphere_area(N) * std::pow(y[i], N - 1);
        sum += wgt * v[i] * v[i];
    }
    return std::sqrt(sum * h);
}

struct Eq1Residual {
    std::vector<double> field;
    double norm = 0.0;
};

/// Central second difference in s of three equally spaced states minus the
/// right-hand side at the middle one.
inline Eq1Residual eq1_residual(const WState& a, const WState& b, const WState& c, const Model& model)
{
    const double ds1 = b.s - a.s, ds2 = c.s - b.s;
    if (!(ds1 > 0.0) || std::abs(ds2 - ds1) > 1e-6 * ds1)
        throw ConfigError("eq1_residual: states must be equally spaced and increasing in s");
    if (a.y != b.y || b.y != c.y || a.kind != b.kind || b.kind != c.kind || a.N != b.N || b.N != c.N)
        throw ConfigError("eq1_residual: states live on different grids");
    if (b.size() < 5) throw ConfigError("eq1_residual: grid too small");
    const double ds = 0.5 * (ds1 + ds2);
    const auto rhs = w_equation_rhs(model, b.s, b.y, b.w, b.ws, b.kind, b.N);
    Eq1Residual r;
    r.field.resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
        r.field[i] = (c.w[i] - 2.0 * b.w[i] + a.w[i]) / (ds * ds) - rhs[i];
    r.norm = weighted_l2(b.y, r.field, model.alpha(), b.kind, b.N);
    return r;
}

/// Anything that can produce (w, grad w, d_s w) at (y, s).
using WSource = std::function<WPoint(double y, double s)>;

/// A series of WStates on one ball grid at uniform s spacing, evaluated by
/// four-point interpolation in s and cubic interpolation in y.
class WSeries {
public:
    explicit WSeries(std::vector<WState> states) : states_(std::move(states))
    {
        if (states_.size() < 4) throw ConfigError("WSeries: need at least four states");
        ds_ = states_[1].s - states_[0].s;
        for (std::size_t k = 1; k < states_.size(); ++k)
            if (std::abs(states_[k].s - states_[k - 1].s - ds_) > 1e-9 * std::max(1.0, ds_) ||
                states_[k].y != states_[0].y)
                throw ConfigError("WSeries: states must share a grid and be equally spaced in s");
    }

    double s_min() const { return states_.front().s; }
    double s_max() const { return states_.back().s; }
    const std::vector<WState>& states() const { return states_; }

    WPoint operator()(double y, double s) const
    {
        const double tol = 1e-12 * std::max(1.0, std::abs(s));
        if (s < s_min() - tol || s > s_max() + tol) throw ConfigError("WSeries: s outside the available range");
        const std::size_t n = states_.size();
        std::vector<double> wv(n), wyv(n), wsv(n);
        // Only the four states around s matter; sample those.
        const double pos = (s - s_min()) / ds_;
        auto k = static_cast<std::ptrdiff_t>(std::floor(pos)) - 1;
        k = std::clamp<std::ptrdiff_t>(k, 0, std::ptrdiff_t(n) - 4);
        for (std::ptrdiff_t j = k; j < k + 4; ++j) {
            const WPoint p = GridBallSampler(states_[std::size_t(j)])(y);
            wv[std::size_t(j)] = p.w;
            wyv[std::size_t(j)] = p.wy;
            wsv[std::size_t(j)] = p.ws;
        }
        auto in_s = [&](const std::vector<double>& f) { return cubic_sample(f, s_min(), ds_, s).value; };
        return {in_s(wv), in_s(wyv), in_s(wsv)};
    }

private:
    std::vector<WState> states_;
    double ds_ = 0.0;
};

enum class RescaleDs { chain_rule, finite_difference };

/// w^delta(y, s) = lambda^{-2/(p-1)} w(y/lambda, s - log lambda), lambda = 1 + delta e^s.
inline WState delta_rescale(const WSource& source, double delta, double s, std::span<const double> y_nodes,
                            const Model& model, BallKind kind = BallKind::line, int N = 1,
                            RescaleDs mode = RescaleDs::chain_rule, double fd_step = 1e-4)
{
    if (!(delta >= 0.0)) throw ConfigError("delta_rescale: delta must be >= 0");
    const double beta = model.beta();
    auto eval = [&](double y, double ss) {
        const double lam = 1.0 + delta * std::exp(ss);
        const double sigma = ss - std::log(lam);
        const double z = y / lam;
        const WPoint q = source(z, sigma);
        const double g = delta * std::exp(ss) / lam; // d(log lambda)/ds
        const double amp = std::pow(lam, -beta);
        WPoint out;
        out.w = amp * q.w;
        out.wy = amp / lam * q.wy;
        out.ws = amp * (-beta * g * q.w - g * z * q.wy + q.ws / lam);
        return out;
    };
    WState st;
    st.s = s;
    st.kind = kind;
    st.N = N;
    st.y.assign(y_nodes.begin(), y_nodes.end());
    st.w.resize(st.y.size());
    st.ws.resize(st.y.size());
    std::vector<double> wy(st.y.size());
    for (std::size_t i = 0; i < st.y.size(); ++i) {
        const WPoint p = eval(st.y[i], s);
        st.w[i] = p.w;
        wy[i] = p.wy;
        if (mode == RescaleDs::chain_rule) {
            st.ws[i] = p.ws;
        } else {
            st.ws[i] = (eval(st.y[i], s + fd_step).w - eval(st.y[i], s - fd_step).w) / (2.0 * fd_step);
        }
    }
    st.wy = std::move(wy);
    return st;
}

/// One RK4 step of the w equation on the interior grid; values at the two edge
/// nodes (|y| = 1 - eta) are extrapolated from inside.  Only one characteristic
/// enters there, at speed eta, so the edge error spreads slowly.  Throws NumericalError on blow-up of the step.
inline WState step_w(const WState& state, double ds, const Model& model)
{
    const std::size_t n = state.size();
    if (n < 6) throw ConfigError("step_w: grid too small");
    const double h = state.h();
    const double edge = std::abs(state.y.back());
    // Characteristic speeds of the principal part are |y| +- 1, so at most 1 + edge.
    if (!(ds > 0.0) || ds > 0.8 * h / (1.0 + edge))
        throw ConfigError("step_w: ds violates the characteristic CFL bound; reduce ds");
    const bool radial = state.kind == BallKind::radial;

    auto extrapolate = [&](std::vector<double>& f) {
        const std::size_t e = n - 1;
        f[e] = 3.0 * f[e - 1] - 3.0 * f[e - 2] + f[e - 3];
        if (!radial) f[0] = 3.0 * f[1] - 3.0 * f[2] + f[3];
    };
    auto rhs = [&](double s, const std::vector<double>& w, const std::vector<double>& v,
                   std::vector<double>& dw, std::vector<double>& dv) {
        dw = v;
        dv = w_equation_rhs(model, s, state.y, w, v, state.kind, state.N);
    };

    std::vector<double> w = state.w, v = state.ws;
    std::vector<double> k1w, k1v, k2w, k2v, k3w, k3v, k4w, k4v, tw(n), tv(n);
    auto stage = [&](const std::vector<double>& dw, const std::vector<double>& dv, double c) {
        for (std::size_t i = 0; i < n; ++i) {
            tw[i] = w[i] + c * ds * dw[i];
            tv[i] = v[i] + c * ds * dv[i];
        }
        extrapolate(tw);
        extrapolate(tv);
    };
    rhs(state.s, w, v, k1w, k1v);
    stage(k1w, k1v, 0.5);
    rhs(state.s + 0.5 * ds, tw, tv, k2w, k2v);
    stage(k2w, k2v, 0.5);
    rhs(state.s + 0.5 * ds, tw, tv, k3w, k3v);
    stage(k3w, k3v, 1.0);
    rhs(state.s + ds, tw, tv, k4w, k4v);

    WState out = state;
    out.s = state.s + ds;
    out.wy.reset();
    for (std::size_t i = 0; i < n; ++i) {
        out.w[i] = w[i] + ds / 6.0 * (k1w[i] + 2 * k2w[i] + 2 * k3w[i] + k4w[i]);
        out.ws[i] = v[i] + ds / 6.0 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]);
    }
    extrapolate(out.w);
    extrapolate(out.ws);

    const double alpha = model.alpha();
    const double before = weighted_l2(state.y, state.w, alpha, state.kind, state.N) +
                          weighted_l2(state.y, state.ws, alpha, state.kind, state.N);
    const double after = weighted_l2(out.y, out.w, alpha, out.kind, out.N) +
                         weighted_l2(out.y, out.ws, alpha, out.kind, out.N);
    if (!std::isfinite(after) || after > 10.0 * before + 1e-300)
        throw NumericalError("step_w: solution grew more than 10x in one step; use a smaller ds");
    return out;
}

inline void write_wstate_csv(std::ostream& out, const WState& st, const Model& model)
{
    out << "s,x0,T0,p,a\n"
        << io::fmt(st.s) << ',' << io::fmt(st.frame.x0) << ',' << io::fmt(st.frame.T0) << ','
        << io::fmt(model.p()) << ',' << io::fmt(model.a()) << "\ny,w,ws\n";
    for (std::size_t i = 0; i < st.size(); ++i)
        out << io::fmt(st.y[i]) << ',' << io::fmt(st.w[i]) << ',' << io::fmt(st.ws[i]) << '\n';
}

} // namespace blowup
