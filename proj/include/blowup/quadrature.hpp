#pragma once

// Gauss-Jacobi rules for the degenerate weights (1 - |y|^2)^beta on the unit ball.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "blowup/errors.hpp"

namespace blowup {

enum class BallKind { line, radial };

/// Nodes and positive weights with  sum_i w_i g(y_i) ~ int_B g(y) (1 - |y|^2)^beta dy.
/// Line rules live on (-1, 1).  Radial rules hold radii in (0, 1) and fold the
/// surface measure |S^{N-1}| r^{N-1} into the weights, so they integrate radial
/// functions over the N-ball.
struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    double beta = 0.0;
    BallKind kind = BallKind::line;
    int N = 1;

    std::size_t size() const { return nodes.size(); }

    double total_weight() const
    {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }

    template <class Fn>
    double integrate(const Fn& g) const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * g(nodes[i]);
        return s;
    }
};

/// Raw n-point Gauss-Jacobi rule on [-1, 1] for the weight (1-x)^a (1+x)^b by
/// Golub-Welsch.  Exact for polynomials of degree <= 2n - 1.
inline QuadRule gauss_jacobi(std::size_t n, double a, double b)
{
    if (n < 1) throw ConfigError("gauss_jacobi: need at least one node");
    if (!(a > -1.0) || !(b > -1.0)) throw ConfigError("gauss_jacobi: exponents must exceed -1");

    Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
    Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 1 ? n - 1 : 1));
    const double ab = a + b;
    for (std::size_t k = 0; k < n; ++k) {
        const double kk = double(k);
        const double den = (2 * kk + ab) * (2 * kk + ab + 2);
        diag(Eigen::Index(k)) = (k == 0) ? (b - a) / (ab + 2) : (b * b - a * a) / den;
    }
    for (std::size_t k = 1; k < n; ++k) {
        const double kk = double(k);
        const double s = 2 * kk + ab;
        double beta_k;
        if (k == 1)
            beta_k = 4 * (1 + a) * (1 + b) / ((2 + ab) * (2 + ab) * (3 + ab));
        else
            beta_k = 4 * kk * (kk + a) * (kk + b) * (kk + ab) / (s * s * (s + 1) * (s - 1));
        sub(Eigen::Index(k - 1)) = std::sqrt(beta_k);
    }
    const double mu0 = std::exp((ab + 1) * std::numbers::ln2 + std::lgamma(a + 1) +
                                std::lgamma(b + 1) - std::lgamma(ab + 2));

    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    if (n == 1) {
        rule.nodes[0] = diag(0);
        rule.weights[0] = mu0;
        return rule;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw NumericalError("gauss_jacobi: eigen-solve failed");
    for (std::size_t i = 0; i < n; ++i) {
        const auto I = Eigen::Index(i);
        const double v0 = solver.eigenvectors()(0, I);
        rule.nodes[i] = solver.eigenvalues()(I);
        rule.weights[i] = mu0 * v0 * v0;
    }
    if (a == b) {
        // Symmetric weight: enforce exact node/weight symmetry.
        for (std::size_t i = 0; i < n / 2; ++i) {
            const std::size_t j = n - 1 - i;
            const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
            const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
            rule.nodes[i] = -x;
            rule.nodes[j] = x;
            rule.weights[i] = rule.weights[j] = w;
        }
        if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    }
    return rule;
}

/// Surface area of the unit sphere S^{N-1}; equals 2 for N = 1.
inline double sphere_area(int N)
{
    return 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N);
}

/// n-point rule for the ball weight (1 - |y|^2)^beta.  In 1-D this is the
/// symmetric Gauss-Jacobi rule on (-1, 1).  In radial mode (N >= 2) the
/// substitution t = r^2 turns  |S^{N-1}| int_0^1 g(r) r^{N-1} (1-r^2)^beta dr  into a
/// Gauss-Jacobi rule with exponents (beta, (N-2)/2); exact for even polynomials
/// in r of degree <= 4n - 2.
inline QuadRule jacobi_quad(std::size_t n, double beta, BallKind kind = BallKind::line, int N = 1)
{
    if (n < 2) throw ConfigError("jacobi_quad: n must be >= 2");
    if (!(beta > -1.0)) throw ConfigError("jacobi_quad: beta must be > -1 (non-integrable weight)");
    if (kind == BallKind::line) {
        QuadRule r = gauss_jacobi(n, beta, beta);
        r.beta = beta;
        r.kind = BallKind::line;
        r.N = 1;
        return r;
    }
    if (N < 2) throw ConfigError("jacobi_quad: radial rules need N >= 2");
    const double b = 0.5 * (N - 2);
    QuadRule raw = gauss_jacobi(n, beta, b);
    QuadRule r;
    r.beta = beta;
    r.kind = BallKind::radial;
    r.N = N;
    r.nodes.resize(n);
    r.weights.resize(n);
    const double scale = sphere_area(N) * std::pow(2.0, -(b + beta + 2.0));
    for (std::size_t i = 0; i < n; ++i) {
        r.nodes[i] = std::sqrt(0.5 * (1.0 + raw.nodes[i]));
        r.weights[i] = scale * raw.weights[i];
    }
    return r;
}

} // namespace blowup
