#ifndef SPI_VERIFY_HPP
#define SPI_VERIFY_HPP

// Randomized sweeps over the lemma oracles. Every sweep is deterministic in
// its seed and reports (trials, failures, worst margin) per check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spi/experiment.hpp"
#include "spi/io.hpp"
#include "spi/lemma_oracles.hpp"
#include "spi/solvers.hpp"

namespace spi {

struct VerifyOptions {
    std::uint64_t seed = 12345;
    std::uint64_t algebraic_trials = 10000;
    std::uint64_t max_k = 2000;
    std::uint64_t operator_trials = 500;
    std::uint64_t resolvent_trials = 1000;
    std::size_t resolvent_resolution = 64;
    // Moment probe problem and chain.
    std::size_t moment_n = 200;
    std::size_t moment_resolution = 100;
    std::uint64_t moment_steps = 5000;
    std::uint64_t moment_paths = 10;
    double eta = 2000.0;
    double lambda = 1e-3;
};

inline constexpr double kBoundRelTol = 1e-12;
inline constexpr double kResidualTol = 1e-10;

// ---------------------------------------------------------------------------

inline HarmonicParams random_harmonic_params(Rng& rng)
{
    HarmonicParams h;
    h.c1 = rng.uniform(0.01, 4.0);
    h.c2 = h.c1 * h.c1 / 4.0 * (rng.uniform() < 0.1 ? 1.0 : rng.uniform(1.0, 3.0));
    h.p = rng.uniform(0.05, 3.0);
    h.r = rng.uniform() < 0.1 ? 0.0 : rng.uniform(0.0, 0.999) * h.c1 * h.p;
    return h;
}

inline std::vector<CheckSummary> verify_algebraic(const VerifyOptions& opt)
{
    CheckSummary product{"harmonic_product_bound"};
    CheckSummary sum{"harmonic_sum_bound"};
    CheckSummary positivity{"harmonic_factor_nonnegative"};
    CheckSummary quadratic{"contraction_quadratic_bound"};
    Rng rng(opt.seed, StreamDomain::sweep, 1);
    for (std::uint64_t t = 0; t < opt.algebraic_trials; ++t) {
        const auto h = random_harmonic_params(rng);
        const auto k = 1 + rng.below(opt.max_k);
        const auto bp = harmonic_product_bound(h, k);
        product.record(bp.holds(kBoundRelTol), bp.margin() / std::max(bp.rhs, 1e-300));
        const auto bs = harmonic_sum_bound(h, k);
        sum.record(bs.holds(kBoundRelTol), bs.margin() / std::max(bs.rhs, 1e-300));
        double min_factor = 1.0;
        for (std::uint64_t j = 1; j <= std::min<std::uint64_t>(k, 64); ++j) {
            min_factor = std::min(min_factor, harmonic_factor(h.c1, h.c2, static_cast<double>(j)));
        }
        positivity.record(min_factor >= -1e-15, min_factor);

        const double mu = rng.uniform(1e-6, 10.0);
        const double alpha = rng.uniform() < 0.05 ? 0.0 : rng.uniform(0.0, 10.0);
        const auto bq = contraction_quadratic_bound(mu, alpha);
        quadratic.record(bq.holds(kBoundRelTol), bq.margin());
    }
    // Equality at alpha = 0.
    const auto at_zero = contraction_quadratic_bound(1.0, 0.0);
    quadratic.record(at_zero.lhs == 1.0 && at_zero.rhs == 1.0, 0.0);
    return {product, sum, positivity, quadratic};
}

// ---------------------------------------------------------------------------

inline Eigen::MatrixXd random_gaussian_matrix(Rng& rng, int rows, int cols)
{
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = rng.normal();
        }
    }
    return m;
}

inline Eigen::VectorXd random_gaussian_vector(Rng& rng, int d)
{
    return random_gaussian_matrix(rng, d, 1).col(0);
}

inline Eigen::MatrixXd random_orthogonal(Rng& rng, int d)
{
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_gaussian_matrix(rng, d, d));
    return qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
}

/// V diag(values) V^T with a random orthogonal V.
inline SmallSymMatrix random_spectrum_matrix(Rng& rng, const Eigen::VectorXd& values)
{
    const int d = static_cast<int>(values.size());
    const auto v = random_orthogonal(rng, d);
    return SmallSymMatrix(symmetrized(v * values.asDiagonal() * v.transpose()));
}

inline std::vector<CheckSummary> verify_operators(const VerifyOptions& opt)
{
    CheckSummary order{"operator_order"};
    CheckSummary contractive{"contractive_positive"};
    CheckSummary strong{"strong_positivity"};
    Rng rng(opt.seed, StreamDomain::sweep, 2);
    for (std::uint64_t t = 0; t < opt.operator_trials; ++t) {
        const int d = 2 + static_cast<int>(rng.below(7));

        Eigen::VectorXd q_spec(d);
        for (int i = 0; i < d; ++i) {
            q_spec(i) = std::exp(rng.uniform(-3.0, 3.0));
        }
        const auto q = random_spectrum_matrix(rng, q_spec);
        const int rank = static_cast<int>(rng.below(static_cast<std::uint64_t>(d) + 1));
        const auto b = random_gaussian_matrix(rng, d, std::max(rank, 1));
        const SmallSymMatrix s(rank == 0 ? Eigen::MatrixXd::Zero(d, d)
                                         : symmetrized(b * b.transpose()));
        const auto oc = operator_order_check(q, s);
        order.record(oc.passed, oc.min_eigenvalue);

        Eigen::VectorXd c_spec(d);
        for (int i = 0; i < d; ++i) {
            c_spec(i) = rng.uniform() < 0.2 ? (rng.uniform() < 0.5 ? 0.0 : 1.0) : rng.uniform();
        }
        const auto qc = random_spectrum_matrix(rng, c_spec * (1.0 - 1e-12));
        const auto u = random_gaussian_vector(rng, d);
        const auto cb = contractive_positive_check(qc, u);
        contractive.record(cb.holds(0.0, 1e-12), cb.margin());

        const double beta = std::exp(rng.uniform(-3.0, 2.0));
        Eigen::VectorXd s_spec(d);
        for (int i = 0; i < d; ++i) {
            s_spec(i) = beta * (1.0 + (i == 0 && rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, 5.0)));
        }
        const auto qs = random_spectrum_matrix(rng, s_spec);
        const double qs_min = qs.min_eigenvalue();
        const double beta_eff = std::min(beta, qs_min); // roundoff in V diag V^T
        const auto sp = strong_positivity_check(qs, beta_eff, random_gaussian_vector(rng, d));
        const double tol = kEigenTolerance * std::max(1.0, 1.0 / beta_eff);
        strong.record(sp.passed(tol), std::min(sp.image.margin(), sp.inverse.margin()));
    }
    return {order, contractive, strong};
}

// ---------------------------------------------------------------------------

inline ParamState random_state(Rng& rng, std::size_t resolution)
{
    const double scale = rng.uniform(0.0, 5.0);
    std::vector<double> w(resolution);
    for (double& v : w) {
        v = scale * rng.normal();
    }
    return {GridFunction(std::move(w)), rng.uniform(-5.0, 5.0)};
}

/// alpha log-uniform on [1e-3, 2e3].
inline double random_step(Rng& rng) { return std::exp(rng.uniform(std::log(1e-3), std::log(2e3))); }

/// ||new - old + alpha * grad f(new)|| in the composite norm.
inline double implicit_residual(const ParamState& old_state, const ParamState& new_state,
                                const Sample& sample, double alpha, double lambda)
{
    return norm(new_state - old_state + alpha * sample_gradient(new_state, sample, lambda));
}

inline std::vector<CheckSummary> verify_resolvent(const VerifyOptions& opt)
{
    CheckSummary residual{"implicit_equation_residual"};
    CheckSummary scalar{"scalar_root_residual"};
    CheckSummary bracket{"root_within_alpha"};
    CheckSummary basic{"resolvent_basic_inequality"};
    CheckSummary nonexp{"non_expansive"};
    CheckSummary frozen{"frozen_bias_contraction"};
    CheckSummary expected{"expected_contraction"};

    const double lambda = opt.lambda;
    const auto data = generate_dataset(200, opt.resolvent_resolution, opt.seed);
    Rng rng(opt.seed, StreamDomain::sweep, 3);
    double ratio_sum = 0.0;
    for (std::uint64_t t = 0; t < opt.resolvent_trials; ++t) {
        const auto& sample = data[rng.below(data.size())];
        const double alpha = random_step(rng);
        const auto u = random_state(rng, data.resolution());

        const ScalarEquation phi(u, sample, alpha, lambda);
        const double c = solve_scalar(phi);
        scalar.record(std::abs(phi(c)) <= kDefaultTolerance, kDefaultTolerance - std::abs(phi(c)));
        bracket.record(std::abs(c) <= alpha, alpha - std::abs(c));

        const auto tu = spi_step(u, sample, alpha, lambda);
        const double res = implicit_residual(u, tu, sample, alpha, lambda);
        residual.record(res <= kResidualTol, kResidualTol - res);

        const auto bb = resolvent_basic_check(u, sample, alpha, lambda);
        basic.record(bb.holds(0.0, kResidualTol), bb.margin());

        const auto v = random_state(rng, data.resolution());
        const auto tv = spi_step(v, sample, alpha, lambda);
        const double d_uv = norm(u - v);
        const double d_t = norm(tu - tv);
        nonexp.record(d_t <= d_uv + kResidualTol, d_uv + kResidualTol - d_t);
        ratio_sum += d_uv > 0.0 ? (d_t * d_t) / (d_uv * d_uv) : 0.0;

        // Same bias for both points: contraction of the w-part.
        const ParamState vb{v.w, u.bias};
        const auto fu = spi_step_frozen_bias(u, sample, alpha, lambda);
        const auto fv = spi_step_frozen_bias(vb, sample, alpha, lambda);
        const double bound = rms_norm(u.w - vb.w) / (1.0 + alpha * lambda) + kResidualTol;
        const double dw = rms_norm(fu.w - fv.w);
        frozen.record(dw <= bound, bound - dw);
    }
    const double mean_ratio = ratio_sum / static_cast<double>(std::max<std::uint64_t>(1, opt.resolvent_trials));
    expected.record(mean_ratio <= 1.0, 1.0 - mean_ratio);
    return {residual, scalar, bracket, basic, nonexp, frozen, expected};
}

// ---------------------------------------------------------------------------

struct MomentResults {
    MomentProbe second;
    MomentProbe fourth;
};

inline MomentResults run_moment_probes(const VerifyOptions& opt)
{
    RunConfig rc;
    rc.n = opt.moment_n;
    rc.resolutions = {opt.moment_resolution};
    rc.steps = opt.moment_steps;
    rc.checkpoint_every = 1;
    rc.eta = opt.eta;
    rc.lambda = opt.lambda;
    rc.dataset_seed = opt.seed;
    rc.seed_base = opt.seed;
    const auto problem = make_problem(rc, opt.moment_resolution);
    const auto reference = compute_reference(problem, rc);

    MomentProbeOptions mo;
    mo.steps = opt.moment_steps;
    mo.paths = opt.moment_paths;
    mo.checkpoint_every = std::max<std::uint64_t>(1, opt.moment_steps / 100);
    mo.seed_base = opt.seed + 1000;
    const Schedule schedule(opt.eta);
    MomentResults out;
    mo.moment = 2;
    out.second = moment_bound_probe(problem, schedule, reference, mo);
    mo.moment = 4;
    out.fourth = moment_bound_probe(problem, schedule, reference, mo);
    return out;
}

inline std::vector<CheckSummary> verify_moments(const VerifyOptions& opt)
{
    const auto r = run_moment_probes(opt);
    CheckSummary m2{"moment2_stabilizes"};
    CheckSummary m4{"moment4_stabilizes"};
    m2.record(r.second.stabilized(), 1.05 * r.second.early_max - r.second.late_max);
    m4.record(r.fourth.stabilized(), 1.05 * r.fourth.early_max - r.fourth.late_max);
    return {m2, m4};
}

inline const std::vector<std::string_view>& verify_suites()
{
    static const std::vector<std::string_view> names{"algebraic", "operators", "resolvent",
                                                     "moments", "all"};
    return names;
}

inline std::vector<CheckSummary> run_verify_suite(std::string_view suite, const VerifyOptions& opt)
{
    std::vector<CheckSummary> out;
    auto append = [&](std::vector<CheckSummary> v) { out.insert(out.end(), v.begin(), v.end()); };
    const bool all = suite == "all";
    if (all || suite == "algebraic") append(verify_algebraic(opt));
    if (all || suite == "operators") append(verify_operators(opt));
    if (all || suite == "resolvent") append(verify_resolvent(opt));
    if (all || suite == "moments") append(verify_moments(opt));
    if (out.empty()) {
        throw std::invalid_argument("unknown suite '" + std::string(suite) + "'");
    }
    return out;
}

} // namespace spi

#endif
