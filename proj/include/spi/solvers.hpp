#ifndef SPI_SOLVERS_HPP
#define SPI_SOLVERS_HPP

// Stochastic proximal iteration (SPI) and the explicit SGD baseline.
//
// For the logistic/ridge sample objective the implicit step
//     new = old - alpha * grad f(new, sample)
// reduces to
//     new.w    = (old.w + c * x) / (1 + alpha * lambda)
//     new.bias = old.bias + c
// where c solves the scalar equation phi(c) = 0,
//     phi(c) = c - alpha * y / (1 + exp(y * z(c)))
//     z(c)   = (<w, x> + c * <x, x>) / (1 + alpha * lambda) + bias + c.
// phi is strictly increasing and its root satisfies |c| <= alpha.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spi/model.hpp"
#include "spi/rng.hpp"

namespace spi {

inline constexpr double kDefaultTolerance = 1e-12;

enum class DecayRule { harmonic, square_summable };

/// alpha_k = eta / k (harmonic) or eta / k^2. eta = 0 gives the frozen schedule.
class Schedule {
public:
    explicit Schedule(double eta, DecayRule rule = DecayRule::harmonic)
        : eta_(eta), rule_(rule)
    {
        if (!(eta_ >= 0.0) || !std::isfinite(eta_)) {
            throw std::invalid_argument("Schedule: eta must be finite and non-negative");
        }
    }

    double eta() const noexcept { return eta_; }
    DecayRule rule() const noexcept { return rule_; }

    double step_size(std::uint64_t k) const
    {
        if (k == 0) {
            throw std::invalid_argument("step_size: steps are numbered from 1");
        }
        const double kk = static_cast<double>(k);
        return rule_ == DecayRule::harmonic ? eta_ / kk : eta_ / (kk * kk);
    }

private:
    double eta_;
    DecayRule rule_;
};

inline double step_size(const Schedule& schedule, std::uint64_t k) { return schedule.step_size(k); }

/// phi(c) with all state-dependent scalars precomputed; O(1) per evaluation.
///
/// bias_coupling = 1 is the full SPI step. bias_coupling = 0 freezes the bias
/// and gives the resolvent of the w-part alone.
class ScalarEquation {
public:
    ScalarEquation(const ParamState& state, const Sample& sample, double alpha, double lambda,
                   double bias_coupling = 1.0)
        : wx_(inner(state.w, sample.x)),
          xx_(sample.norm_sq),
          bias_(state.bias),
          y_(sign(sample.y)),
          alpha_(alpha),
          shrink_(1.0 / (1.0 + alpha * lambda)),
          coupling_(bias_coupling)
    {
        if (!(alpha >= 0.0)) {
            throw std::invalid_argument("ScalarEquation: alpha must be non-negative");
        }
    }

    double alpha() const noexcept { return alpha_; }

    double margin(double c) const noexcept
    {
        return y_ * ((wx_ + c * xx_) * shrink_ + bias_ + coupling_ * c);
    }

    double operator()(double c) const noexcept
    {
        return c - alpha_ * y_ * sigmoid(-margin(c));
    }

    double derivative(double c) const noexcept
    {
        const double s = sigmoid(-margin(c));
        return 1.0 + alpha_ * s * (1.0 - s) * (xx_ * shrink_ + coupling_);
    }

private:
    double wx_;
    double xx_;
    double bias_;
    double y_;
    double alpha_;
    double shrink_;
    double coupling_;
};

inline double spi_residual(double c, const ParamState& state, const Sample& sample, double alpha,
                           double lambda)
{
    return ScalarEquation(state, sample, alpha, lambda)(c);
}

/// Root of an increasing scalar equation by Newton's method, falling back to
/// bisection whenever the Newton iterate leaves the current bracket or fails
/// to halve the previous step. Plain Newton can cycle on the saturated sigmoid.
inline double solve_scalar(const ScalarEquation& phi, double tol = kDefaultTolerance)
{
    const double alpha = phi.alpha();
    if (alpha == 0.0) {
        return 0.0;
    }
    double lo = -alpha - tol;
    double hi = alpha + tol;
    const double f_lo = phi(lo);
    const double f_hi = phi(hi);
    if (!(f_lo < 0.0 && f_hi > 0.0)) {
        throw std::logic_error("solve_scalar: bracket does not straddle the root (phi(lo)="
                               + std::to_string(f_lo) + ", phi(hi)=" + std::to_string(f_hi) + ")");
    }

    double c = 0.0;
    double best_c = c;
    double best_abs = std::numeric_limits<double>::infinity();
    double last_step = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
        const double f = phi(c);
        if (std::abs(f) < best_abs) {
            best_abs = std::abs(f);
            best_c = c;
        }
        if (std::abs(f) <= tol) {
            return c;
        }
        if (f < 0.0) {
            lo = c;
        } else {
            hi = c;
        }
        double next = c - f / phi.derivative(c);
        if (!(next > lo && next < hi) || std::abs(next - c) > 0.5 * last_step) {
            next = 0.5 * (lo + hi);
        }
        last_step = std::abs(next - c);
        if (next == c || hi - lo <= std::numeric_limits<double>::epsilon() * std::abs(c)) {
            break;
        }
        c = next;
    }
    // Bracket collapsed to adjacent doubles before reaching tol.
    return best_c;
}

inline double solve_ck(const ParamState& state, const Sample& sample, double alpha, double lambda,
                       double tol = kDefaultTolerance)
{
    return solve_scalar(ScalarEquation(state, sample, alpha, lambda), tol);
}

inline ParamState spi_step(const ParamState& state, const Sample& sample, double alpha,
                           double lambda, double tol = kDefaultTolerance)
{
    const double c = solve_ck(state, sample, alpha, lambda, tol);
    const double shrink = 1.0 / (1.0 + alpha * lambda);
    return {linear_combination(shrink, state.w, shrink * c, sample.x), state.bias + c};
}

/// Resolvent of the sample objective in w alone, with the bias held fixed.
inline ParamState spi_step_frozen_bias(const ParamState& state, const Sample& sample,
                                       double alpha, double lambda,
                                       double tol = kDefaultTolerance)
{
    const double c = solve_scalar(ScalarEquation(state, sample, alpha, lambda, 0.0), tol);
    const double shrink = 1.0 / (1.0 + alpha * lambda);
    return {linear_combination(shrink, state.w, shrink * c, sample.x), state.bias};
}

inline ParamState sgd_step(const ParamState& state, const Sample& sample, double alpha,
                           double lambda)
{
    const double y = sign(sample.y);
    const double scale = -y * sigmoid(-y * predict(state, sample.x));
    // state - alpha * (scale * x + lambda * w)
    return {linear_combination(1.0 - alpha * lambda, state.w, -alpha * scale, sample.x),
            state.bias - alpha * scale};
}

// ---------------------------------------------------------------------------

enum class Method { spi, sgd };

inline std::string_view to_string(Method m) { return m == Method::spi ? "spi" : "sgd"; }

inline Method parse_method(std::string_view s)
{
    if (s == "spi" || s == "SPI") {
        return Method::spi;
    }
    if (s == "sgd" || s == "SGD") {
        return Method::sgd;
    }
    throw std::invalid_argument("unknown method '" + std::string(s) + "' (expected spi or sgd)");
}

struct Checkpoint {
    std::uint64_t k;
    ParamState state;
};

struct ChainResult {
    std::vector<Checkpoint> checkpoints;
    ParamState final_state;
    std::uint64_t seed = 0;
};

struct ChainOptions {
    std::uint64_t steps = 1;
    std::uint64_t checkpoint_every = 1;
    double tolerance = kDefaultTolerance;
};

/// Sample index stream of one chain. SPI and SGD chains with the same seed draw
/// the same indices.
class SampleStream {
public:
    SampleStream(std::uint64_t seed, std::size_t n)
        : rng_(seed, StreamDomain::chain), n_(n)
    {
    }

    std::size_t next() { return static_cast<std::size_t>(rng_.below(n_)); }

private:
    Rng rng_;
    std::size_t n_;
};

/// Runs M steps from the zero state. The checkpoint at k records the state
/// after k updates (the iterate w^{k+1}).
template <typename OnCheckpoint>
ParamState run_chain_with(const Problem& problem, Method method, const Schedule& schedule,
                          const ChainOptions& options, std::uint64_t seed,
                          OnCheckpoint&& on_checkpoint)
{
    if (options.steps == 0 || options.checkpoint_every == 0) {
        throw std::invalid_argument("run_chain: steps and checkpoint_every must be >= 1");
    }
    const auto& data = problem.dataset();
    const double lambda = problem.lambda();
    SampleStream stream(seed, data.size());
    auto state = ParamState::zeros(problem.resolution());
    for (std::uint64_t k = 1; k <= options.steps; ++k) {
        const auto& sample = data[stream.next()];
        const double alpha = schedule.step_size(k);
        state = method == Method::spi ? spi_step(state, sample, alpha, lambda, options.tolerance)
                                      : sgd_step(state, sample, alpha, lambda);
        if (k % options.checkpoint_every == 0) {
            on_checkpoint(k, state);
        }
    }
    return state;
}

inline ChainResult run_chain(const Problem& problem, Method method, const Schedule& schedule,
                             const ChainOptions& options, std::uint64_t seed)
{
    ChainResult result;
    result.seed = seed;
    result.final_state = run_chain_with(problem, method, schedule, options, seed,
                                        [&](std::uint64_t k, const ParamState& s) {
                                            result.checkpoints.push_back({k, s});
                                        });
    return result;
}

} // namespace spi

#endif
