#ifndef SPI_LEMMA_ORACLES_HPP
#define SPI_LEMMA_ORACLES_HPP

// Executable checks of the quantitative inequalities behind the SPI
// convergence analysis. Each check returns the two sides so callers can
// report margins, not just a verdict.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spi/model.hpp"
#include "spi/solvers.hpp"

namespace spi {

struct Bound {
    double lhs = 0.0;
    double rhs = 0.0;

    /// lhs <= rhs up to abs_tol + rel_tol * |rhs|.
    bool holds(double rel_tol = 0.0, double abs_tol = 0.0) const noexcept
    {
        return lhs <= rhs + abs_tol + rel_tol * std::abs(rhs);
    }

    /// Positive when the inequality holds with room to spare.
    double margin() const noexcept { return rhs - lhs; }
};

/// Constants of the harmonic-product inequalities.
struct HarmonicParams {
    double c1 = 1.0;
    double c2 = 1.0;
    double p = 1.0;
    double r = 0.0;
};

namespace detail {

/// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline void validate_harmonic(const HarmonicParams& h, bool with_r)
{
    if (!(h.c1 > 0.0) || !(h.c2 > 0.0) || !(h.p > 0.0)) {
        throw std::invalid_argument("harmonic bound: C1, C2, p must be positive");
    }
    if (!(4.0 * h.c2 >= h.c1 * h.c1)) {
        throw std::invalid_argument("harmonic bound: requires 4*C2 >= C1^2");
    }
    if (with_r && !(h.r >= 0.0 && h.c1 * h.p > h.r)) {
        throw std::invalid_argument("harmonic bound: requires C1*p > r >= 0");
    }
}

} // namespace detail

/// 1 - C1/j + C2/j^2; non-negative whenever 4*C2 >= C1^2.
inline double harmonic_factor(double c1, double c2, double j) noexcept
{
    return 1.0 - c1 / j + c2 / (j * j);
}

inline Bound harmonic_product_bound(const HarmonicParams& h, std::uint64_t k)
{
    detail::validate_harmonic(h, false);
    if (k == 0) {
        throw std::invalid_argument("harmonic_product_bound: k must be >= 1");
    }
    // Log-space product, descending j, compensated.
    detail::CompensatedSum log_prod;
    bool zero = false;
    for (std::uint64_t j = k; j >= 1; --j) {
        const double f = harmonic_factor(h.c1, h.c2, static_cast<double>(j));
        if (f <= 0.0) {
            zero = true;
            break;
        }
        log_prod.add(h.p * std::log(f));
    }
    Bound b;
    b.lhs = zero ? 0.0 : std::exp(log_prod.value());
    b.rhs = std::exp(h.c2 * h.p * std::numbers::pi * std::numbers::pi / 6.0)
        * std::pow(static_cast<double>(k + 1), -h.c1 * h.p);
    return b;
}

inline Bound harmonic_sum_bound(const HarmonicParams& h, std::uint64_t k)
{
    detail::validate_harmonic(h, true);
    if (k == 0) {
        throw std::invalid_argument("harmonic_sum_bound: k must be >= 1");
    }
    // term_j = j^{-(1+r)} * prod_{i=j..k} factor_i^p; the log-product grows as j descends.
    detail::CompensatedSum log_prod;
    detail::CompensatedSum sum;
    for (std::uint64_t j = k; j >= 1; --j) {
        const double jj = static_cast<double>(j);
        const double f = harmonic_factor(h.c1, h.c2, jj);
        if (f <= 0.0) {
            break; // every remaining term contains this factor
        }
        log_prod.add(h.p * std::log(f));
        sum.add(std::exp(log_prod.value() - (1.0 + h.r) * std::log(jj)));
    }
    Bound b;
    b.lhs = sum.value();
    b.rhs = std::exp(h.c2 * h.p * std::numbers::pi * std::numbers::pi / 6.0 + h.c1 * h.p)
        * std::pow(static_cast<double>(k + 1), -h.r) / (h.c1 * h.p - h.r);
    return b;
}

/// (1 + mu*alpha)^-2 <= 1 - 2 mu alpha + 3 mu^2 alpha^2.
inline Bound contraction_quadratic_bound(double mu_bar, double alpha)
{
    if (!(mu_bar > 0.0) || !(alpha >= 0.0)) {
        throw std::invalid_argument("contraction_quadratic_bound: need mu > 0, alpha >= 0");
    }
    const double x = mu_bar * alpha;
    return {1.0 / ((1.0 + x) * (1.0 + x)), 1.0 - 2.0 * x + 3.0 * x * x};
}

/// ||T u - u|| <= alpha * ||grad f(u)|| for the resolvent of alpha*f.
inline Bound resolvent_basic_check(const ParamState& state, const Sample& sample, double alpha,
                                   double lambda)
{
    const auto next = spi_step(state, sample, alpha, lambda);
    return {norm(next - state), alpha * norm(sample_gradient(state, sample, lambda))};
}

inline Bound resolvent_basic_check(const Problem& problem, const ParamState& state, double alpha,
                                   std::size_t j)
{
    return resolvent_basic_check(state, problem.dataset().at(j), alpha, problem.lambda());
}

// ---------------------------------------------------------------------------
// Finite-dimensional operator inequalities.

inline constexpr std::size_t kMaxOperatorDimension = 16;
inline constexpr double kEigenTolerance = 1e-10;

class SmallSymMatrix {
public:
    explicit SmallSymMatrix(Eigen::MatrixXd m)
        : m_(std::move(m))
    {
        if (m_.rows() != m_.cols() || m_.rows() == 0
            || static_cast<std::size_t>(m_.rows()) > kMaxOperatorDimension) {
            throw std::invalid_argument("SmallSymMatrix: need square dimension in 1..16");
        }
        const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
        if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale) {
            throw std::invalid_argument("SmallSymMatrix: matrix is not symmetric");
        }
    }

    static SmallSymMatrix identity(std::size_t d)
    {
        return SmallSymMatrix(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d),
                                                        static_cast<Eigen::Index>(d)));
    }

    std::size_t dimension() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    const Eigen::MatrixXd& matrix() const noexcept { return m_; }

    /// Ascending eigenvalues.
    Eigen::VectorXd eigenvalues() const
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }
    double min_eigenvalue() const { return eigenvalues()(0); }
    double max_eigenvalue() const { return eigenvalues()(m_.rows() - 1); }

private:
    Eigen::MatrixXd m_;
};

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

struct OrderCheck {
    double min_eigenvalue = 0.0; // of Q^{-1} - (Q+S)^{-1}
    bool passed = false;
};

/// (Q + S)^{-1} <= Q^{-1} for Q positive definite and S positive semidefinite.
inline OrderCheck operator_order_check(const SmallSymMatrix& q, const SmallSymMatrix& s)
{
    if (q.dimension() != s.dimension()) {
        throw std::invalid_argument("operator_order_check: dimension mismatch");
    }
    if (!(q.min_eigenvalue() > kEigenTolerance)) {
        throw std::invalid_argument("operator_order_check: Q must be invertible with Q^-1 > 0");
    }
    if (s.min_eigenvalue() < -kEigenTolerance) {
        throw std::invalid_argument("operator_order_check: S must be positive semidefinite");
    }
    const Eigen::MatrixXd q_inv = q.matrix().inverse();
    const Eigen::MatrixXd qs_inv = (q.matrix() + s.matrix()).inverse();
    const SmallSymMatrix diff(symmetrized(q_inv - qs_inv));
    OrderCheck out;
    out.min_eigenvalue = diff.min_eigenvalue();
    out.passed = out.min_eigenvalue >= -kEigenTolerance;
    return out;
}

/// ||Q u||^2 <= <Q u, u> for positive, contractive Q.
inline Bound contractive_positive_check(const SmallSymMatrix& q, const Eigen::VectorXd& u)
{
    if (static_cast<std::size_t>(u.size()) != q.dimension()) {
        throw std::invalid_argument("contractive_positive_check: dimension mismatch");
    }
    const auto ev = q.eigenvalues();
    if (ev(0) < -kEigenTolerance) {
        throw std::invalid_argument("contractive_positive_check: Q must be positive semidefinite");
    }
    if (std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1))) > 1.0 + kEigenTolerance) {
        throw std::invalid_argument("contractive_positive_check: Q must be contractive");
    }
    const Eigen::VectorXd qu = q.matrix() * u;
    return {qu.squaredNorm(), qu.dot(u)};
}

struct StrongPositivityCheck {
    Bound image;   // lhs = beta*||u||, rhs = ||Q u||
    Bound inverse; // lhs = ||Q^{-1}||, rhs = 1/beta
    bool passed(double tol = kEigenTolerance) const noexcept
    {
        return image.holds(0.0, tol) && inverse.holds(0.0, tol);
    }
};

/// <Qu,u> >= beta ||u||^2 implies ||Qu|| >= beta ||u|| and ||Q^{-1}|| <= 1/beta.
/// ||Q^{-1}|| is taken from an SVD of the explicit inverse, not from the spectrum of Q.
inline StrongPositivityCheck strong_positivity_check(const SmallSymMatrix& q, double beta,
                                                     const Eigen::VectorXd& u)
{
    if (!(beta > 0.0)) {
        throw std::invalid_argument("strong_positivity_check: beta must be positive");
    }
    if (static_cast<std::size_t>(u.size()) != q.dimension()) {
        throw std::invalid_argument("strong_positivity_check: dimension mismatch");
    }
    if (q.min_eigenvalue() < beta - kEigenTolerance) {
        throw std::invalid_argument("strong_positivity_check: Q is not strongly positive with beta");
    }
    StrongPositivityCheck out;
    out.image = {beta * u.norm(), (q.matrix() * u).norm()};
    const Eigen::MatrixXd inv = q.matrix().partialPivLu().inverse();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(inv);
    out.inverse = {svd.singularValues()(0), 1.0 / beta};
    return out;
}

// ---------------------------------------------------------------------------
// A priori moment bound, estimated by Monte Carlo.

struct MomentProbe {
    std::vector<std::uint64_t> k;
    std::vector<double> mean_moment; // E||w^k - w*||^moment per checkpoint
    double global_max = 0.0;
    double late_max = 0.0;  // max over the final quarter of checkpoints
    double early_max = 0.0; // max over the first three quarters

    /// The running maximum grows by at most 5% over the final quarter.
    bool stabilized(double factor = 1.05) const noexcept
    {
        return std::isfinite(global_max) && late_max <= factor * early_max;
    }
};

struct MomentProbeOptions {
    std::uint64_t steps = 5000;
    std::uint64_t paths = 10;
    unsigned moment = 2;
    std::uint64_t checkpoint_every = 50;
    std::uint64_t seed_base = 1;
};

inline MomentProbe moment_bound_probe(const Problem& problem, const Schedule& schedule,
                                      const ParamState& reference,
                                      const MomentProbeOptions& options)
{
    if (options.moment == 0 || options.moment % 2 != 0) {
        throw std::invalid_argument("moment_bound_probe: moment must be a positive even integer");
    }
    if (options.paths == 0) {
        throw std::invalid_argument("moment_bound_probe: paths must be >= 1");
    }
    const std::uint64_t count = options.steps / options.checkpoint_every;
    if (count < 4) {
        throw std::invalid_argument("moment_bound_probe: need at least four checkpoints");
    }
    MomentProbe probe;
    probe.mean_moment.assign(count, 0.0);
    const ChainOptions chain{options.steps, options.checkpoint_every, kDefaultTolerance};
    const double half_moment = static_cast<double>(options.moment) / 2.0;
    for (std::uint64_t p = 1; p <= options.paths; ++p) {
        std::size_t idx = 0;
        run_chain_with(problem, Method::spi, schedule, chain, options.seed_base + p,
                       [&](std::uint64_t, const ParamState& s) {
                           probe.mean_moment[idx++]
                               += std::pow(squared_distance(s, reference), half_moment);
                       });
    }
    for (std::uint64_t i = 0; i < count; ++i) {
        probe.k.push_back((i + 1) * options.checkpoint_every);
        probe.mean_moment[i] /= static_cast<double>(options.paths);
    }
    const std::size_t split = count - count / 4;
    for (std::size_t i = 0; i < count; ++i) {
        const double v = probe.mean_moment[i];
        probe.global_max = std::max(probe.global_max, v);
        double& bucket = i < split ? probe.early_max : probe.late_max;
        bucket = std::max(bucket, v);
    }
    return probe;
}

} // namespace spi

#endif
