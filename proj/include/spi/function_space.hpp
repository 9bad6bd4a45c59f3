#ifndef SPI_FUNCTION_SPACE_HPP
#define SPI_FUNCTION_SPACE_HPP

// Discretized L2(0,1): functions are stored by their values at the N interior
// points t_i = i/(N+1). The inner product carries the weight 1/(N+1), so the
// induced norm is the RMS norm and coordinate vectors are their own Riesz
// representatives.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spi/rng.hpp"

namespace spi {

/// Interior equidistant grid t_i = i/(N+1), i = 1..N.
inline std::vector<double> grid(std::size_t resolution)
{
    if (resolution == 0) {
        throw std::invalid_argument("grid: resolution must be positive");
    }
    std::vector<double> t(resolution);
    const double denom = static_cast<double>(resolution + 1);
    for (std::size_t i = 0; i < resolution; ++i) {
        t[i] = static_cast<double>(i + 1) / denom;
    }
    return t;
}

class GridFunction {
public:
    GridFunction() = default;

    /// Checked construction: non-empty, all values finite.
    explicit GridFunction(std::vector<double> values)
        : values_(std::move(values))
    {
        if (values_.empty()) {
            throw std::invalid_argument("GridFunction: resolution must be positive");
        }
        for (double v : values_) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("GridFunction: non-finite value");
            }
        }
    }

    static GridFunction zeros(std::size_t resolution)
    {
        if (resolution == 0) {
            throw std::invalid_argument("GridFunction: resolution must be positive");
        }
        return GridFunction(unchecked, std::vector<double>(resolution, 0.0));
    }

    static GridFunction constant(std::size_t resolution, double value)
    {
        return GridFunction(std::vector<double>(resolution, value));
    }

    /// Unit coordinate vector e_index (zero-based).
    static GridFunction unit(std::size_t resolution, std::size_t index)
    {
        auto g = zeros(resolution);
        g.values_.at(index) = 1.0;
        return g;
    }

    std::size_t resolution() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    bool all_finite() const noexcept
    {
        for (double v : values_) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
        return true;
    }

    /// a*u + b*v, elementwise.
    friend GridFunction linear_combination(double a, const GridFunction& u, double b,
                                           const GridFunction& v)
    {
        require_same_resolution(u, v);
        std::vector<double> out(u.resolution());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = a * u.values_[i] + b * v.values_[i];
        }
        return GridFunction(unchecked, std::move(out));
    }

    friend GridFunction operator+(const GridFunction& u, const GridFunction& v)
    {
        return linear_combination(1.0, u, 1.0, v);
    }
    friend GridFunction operator-(const GridFunction& u, const GridFunction& v)
    {
        return linear_combination(1.0, u, -1.0, v);
    }
    friend GridFunction operator*(double a, const GridFunction& u)
    {
        std::vector<double> out(u.values_);
        for (double& x : out) {
            x *= a;
        }
        return GridFunction(unchecked, std::move(out));
    }

    friend bool operator==(const GridFunction&, const GridFunction&) = default;

    static void require_same_resolution(const GridFunction& u, const GridFunction& v)
    {
        if (u.resolution() != v.resolution()) {
            throw std::invalid_argument("resolution mismatch: " + std::to_string(u.resolution())
                                        + " vs " + std::to_string(v.resolution()));
        }
    }

private:
    struct Unchecked {};
    static constexpr Unchecked unchecked{};

    // Arithmetic results skip validation: a diverging explicit iteration may
    // legitimately overflow, and the experiment layer reports that as +inf.
    GridFunction(Unchecked, std::vector<double> values)
        : values_(std::move(values))
    {
    }

    std::vector<double> values_;
};

/// (1/(N+1)) sum u_i v_i.
inline double inner(const GridFunction& u, const GridFunction& v)
{
    GridFunction::require_same_resolution(u, v);
    const auto a = u.values();
    const auto b = v.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] * b[i];
    }
    return sum / static_cast<double>(a.size() + 1);
}

inline double rms_norm(const GridFunction& u) { return std::sqrt(inner(u, u)); }

// ---------------------------------------------------------------------------
// The two data classes.

inline constexpr std::size_t kPolynomialDegree = 4;

struct TrigParams {
    double amplitude = 1.0;
    int frequency = 1;
    double phase = 0.0;
};

/// Grid evaluation of sum_d coeffs[d] t^d (Horner).
inline GridFunction evaluate_polynomial(std::span<const double> coeffs, std::size_t resolution)
{
    const auto t = grid(resolution);
    std::vector<double> out(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        double acc = 0.0;
        for (std::size_t d = coeffs.size(); d-- > 0;) {
            acc = acc * t[i] + coeffs[d];
        }
        out[i] = acc;
    }
    return GridFunction(std::move(out));
}

/// Grid evaluation of a*sin(2*pi*nu*t + phi).
inline GridFunction evaluate_trig(const TrigParams& p, std::size_t resolution)
{
    const auto t = grid(resolution);
    std::vector<double> out(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        out[i] = p.amplitude * std::sin(2.0 * std::numbers::pi * p.frequency * t[i] + p.phase);
    }
    return GridFunction(std::move(out));
}

// Coefficient laws: a_d ~ U[-1,1]; amplitude ~ U[0.5,1.5], frequency ~ U{1..10},
// phase ~ U[0, 2pi). Draw order is fixed and independent of the resolution, so
// one seed describes the same functions at every N.
inline std::array<double, kPolynomialDegree + 1> draw_polynomial_coefficients(Rng& rng)
{
    std::array<double, kPolynomialDegree + 1> a{};
    for (double& c : a) {
        c = rng.uniform(-1.0, 1.0);
    }
    return a;
}

inline constexpr int kMaxFrequency = 10;

inline TrigParams draw_trig_params(Rng& rng)
{
    TrigParams p;
    p.amplitude = rng.uniform(0.5, 1.5);
    p.frequency = 1 + static_cast<int>(rng.below(kMaxFrequency));
    p.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return p;
}

inline GridFunction sample_polynomial(Rng& rng, std::size_t resolution)
{
    const auto a = draw_polynomial_coefficients(rng);
    return evaluate_polynomial(a, resolution);
}

inline GridFunction sample_trig(Rng& rng, std::size_t resolution)
{
    return evaluate_trig(draw_trig_params(rng), resolution);
}

// ---------------------------------------------------------------------------
// Labeled data.

enum class Label : int { polynomial = -1, trigonometric = 1 };

inline double sign(Label y) noexcept { return static_cast<double>(static_cast<int>(y)); }

inline Label label_from_int(int y)
{
    if (y == -1) {
        return Label::polynomial;
    }
    if (y == 1) {
        return Label::trigonometric;
    }
    throw std::invalid_argument("label must be -1 or +1, got " + std::to_string(y));
}

/// One labeled sample with its squared norm cached for the proximal step.
struct Sample {
    Sample(GridFunction x_, Label y_)
        : x(std::move(x_)), y(y_), norm_sq(inner(x, x))
    {
    }

    GridFunction x;
    Label y;
    double norm_sq;
};

class Dataset {
public:
    Dataset() = default;

    explicit Dataset(std::vector<Sample> samples)
        : samples_(std::move(samples))
    {
        if (samples_.empty()) {
            throw std::invalid_argument("Dataset: no samples");
        }
        const auto n = samples_.front().x.resolution();
        for (const auto& s : samples_) {
            if (s.x.resolution() != n) {
                throw std::invalid_argument("Dataset: samples have different resolutions");
            }
        }
    }

    std::size_t size() const noexcept { return samples_.size(); }
    std::size_t resolution() const noexcept
    {
        return samples_.empty() ? 0 : samples_.front().x.resolution();
    }
    const Sample& operator[](std::size_t j) const { return samples_[j]; }
    const Sample& at(std::size_t j) const
    {
        if (j >= samples_.size()) {
            throw std::out_of_range("sample index " + std::to_string(j) + " out of range [0, "
                                    + std::to_string(samples_.size()) + ")");
        }
        return samples_[j];
    }
    std::span<const Sample> samples() const noexcept { return samples_; }

    friend bool operator==(const Dataset& a, const Dataset& b)
    {
        if (a.size() != b.size()) {
            return false;
        }
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[j].y != b[j].y || !(a[j].x == b[j].x)) {
                return false;
            }
        }
        return true;
    }

private:
    std::vector<Sample> samples_;
};

/// n/2 polynomials labeled -1 followed by n/2 trigonometric functions labeled +1.
inline Dataset generate_dataset(std::size_t n, std::size_t resolution, std::uint64_t seed)
{
    if (n < 2 || n % 2 != 0) {
        throw std::invalid_argument("generate_dataset: n must be even and >= 2, got "
                                    + std::to_string(n));
    }
    if (resolution == 0) {
        throw std::invalid_argument("generate_dataset: resolution must be positive");
    }
    Rng rng(seed, StreamDomain::dataset);
    std::vector<Sample> samples;
    samples.reserve(n);
    for (std::size_t j = 0; j < n / 2; ++j) {
        samples.emplace_back(sample_polynomial(rng, resolution), Label::polynomial);
    }
    for (std::size_t j = 0; j < n / 2; ++j) {
        samples.emplace_back(sample_trig(rng, resolution), Label::trigonometric);
    }
    return Dataset(std::move(samples));
}

} // namespace spi

#endif
