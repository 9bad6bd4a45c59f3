#ifndef SPI_MODEL_HPP
#define SPI_MODEL_HPP

// Affine classifier h([w, b], x) = <w, x> + b with logistic loss and a ridge
// term on w (not on the bias). Sample indices are zero-based.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spi/function_space.hpp"

namespace spi {

/// Optimization variable [w, b]. Gradients use the same representation.
struct ParamState {
    GridFunction w;
    double bias = 0.0;

    static ParamState zeros(std::size_t resolution)
    {
        return ParamState{GridFunction::zeros(resolution), 0.0};
    }

    std::size_t resolution() const noexcept { return w.resolution(); }

    bool all_finite() const noexcept { return w.all_finite() && std::isfinite(bias); }

    friend ParamState operator+(const ParamState& a, const ParamState& b)
    {
        return {a.w + b.w, a.bias + b.bias};
    }
    friend ParamState operator-(const ParamState& a, const ParamState& b)
    {
        return {a.w - b.w, a.bias - b.bias};
    }
    friend ParamState operator*(double s, const ParamState& a) { return {s * a.w, s * a.bias}; }

    friend bool operator==(const ParamState&, const ParamState&) = default;
};

/// Composite inner product: RMS-weighted on w plus the plain product of biases.
inline double inner(const ParamState& a, const ParamState& b)
{
    return inner(a.w, b.w) + a.bias * b.bias;
}

inline double norm(const ParamState& a) { return std::sqrt(inner(a, a)); }

/// Squared composite distance; +inf when either side has overflowed.
inline double squared_distance(const ParamState& a, const ParamState& b)
{
    const double d = inner(a - b, a - b);
    return std::isfinite(d) ? d : std::numeric_limits<double>::infinity();
}

class Problem {
public:
    Problem(Dataset dataset, double lambda)
        : dataset_(std::move(dataset)), lambda_(lambda)
    {
        if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) {
            throw std::invalid_argument("Problem: lambda must be positive");
        }
        if (dataset_.size() == 0) {
            throw std::invalid_argument("Problem: empty dataset");
        }
    }

    const Dataset& dataset() const noexcept { return dataset_; }
    double lambda() const noexcept { return lambda_; }
    std::size_t size() const noexcept { return dataset_.size(); }
    std::size_t resolution() const noexcept { return dataset_.resolution(); }

private:
    Dataset dataset_;
    double lambda_;
};

/// Logistic function, evaluated without overflow for any finite z.
inline double sigmoid(double z) noexcept
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// ln(1 + e^z) as max(z, 0) + log1p(e^{-|z|}).
inline double softplus(double z) noexcept
{
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

inline double predict(const ParamState& state, const GridFunction& x)
{
    return inner(state.w, x) + state.bias;
}

inline double loss(double h, Label y) noexcept { return softplus(-h * sign(y)); }

inline double ridge_term(const Problem& problem, const ParamState& state)
{
    return 0.5 * problem.lambda() * inner(state.w, state.w);
}

inline double sample_objective(const Problem& problem, const ParamState& state, std::size_t j)
{
    const auto& s = problem.dataset().at(j);
    return loss(predict(state, s.x), s.y) + ridge_term(problem, state);
}

inline double full_objective(const Problem& problem, const ParamState& state)
{
    double sum = 0.0;
    for (const auto& s : problem.dataset().samples()) {
        sum += loss(predict(state, s.x), s.y);
    }
    return sum / static_cast<double>(problem.size()) + ridge_term(problem, state);
}

/// Gradient of the sampled objective for an explicit sample (shared with the solvers).
inline ParamState sample_gradient(const ParamState& state, const Sample& sample, double lambda)
{
    const double y = sign(sample.y);
    const double scale = -y * sigmoid(-y * predict(state, sample.x));
    return {linear_combination(scale, sample.x, lambda, state.w), scale};
}

inline ParamState sample_gradient(const Problem& problem, const ParamState& state, std::size_t j)
{
    return sample_gradient(state, problem.dataset().at(j), problem.lambda());
}

inline ParamState full_gradient(const Problem& problem, const ParamState& state)
{
    const auto& data = problem.dataset();
    // Accumulate the loss part as a weighted sum of samples, then add the ridge term once.
    std::vector<double> acc(problem.resolution(), 0.0);
    double bias = 0.0;
    for (const auto& s : data.samples()) {
        const double y = sign(s.y);
        const double scale = -y * sigmoid(-y * predict(state, s.x));
        const auto xs = s.x.values();
        for (std::size_t i = 0; i < acc.size(); ++i) {
            acc[i] += scale * xs[i];
        }
        bias += scale;
    }
    const double inv_n = 1.0 / static_cast<double>(problem.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
        acc[i] = acc[i] * inv_n + problem.lambda() * state.w[i];
    }
    return {GridFunction(std::move(acc)), bias * inv_n};
}

} // namespace spi

#endif
