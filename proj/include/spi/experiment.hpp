#ifndef SPI_EXPERIMENT_HPP
#define SPI_EXPERIMENT_HPP

// Mean-squared error curves E||w^k - w*||^2 against a long-run reference
// solution, averaged over independent sample streams.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "spi/model.hpp"
#include "spi/solvers.hpp"

namespace spi {

struct RunConfig {
    std::size_t n = 200;
    std::vector<std::size_t> resolutions{200, 400, 800, 1600};
    std::uint64_t steps = 10000;
    std::uint64_t paths = 10;
    double eta = 2000.0;
    double lambda = 1e-3;
    std::uint64_t checkpoint_every = 100;
    std::uint64_t seed_base = 1;
    std::uint64_t dataset_seed = 2024;
    std::uint64_t reference_multiplier = 10;
    double tolerance = kDefaultTolerance;
    unsigned threads = 0; // 0: hardware concurrency

    void validate() const
    {
        auto fail = [](const std::string& what) { throw std::invalid_argument("RunConfig: " + what); };
        if (n < 2 || n % 2 != 0) fail("n must be even and >= 2");
        if (resolutions.empty()) fail("at least one resolution required");
        for (auto r : resolutions) {
            if (r == 0) fail("resolutions must be positive");
        }
        if (steps == 0) fail("steps must be >= 1");
        if (paths == 0) fail("paths must be >= 1");
        if (!(eta > 0.0) || !std::isfinite(eta)) fail("eta must be positive");
        if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda must be positive");
        if (checkpoint_every == 0 || steps % checkpoint_every != 0) {
            fail("checkpoint_every must divide steps");
        }
        if (reference_multiplier == 0) fail("reference_multiplier must be >= 1");
        if (!(tolerance > 0.0)) fail("tolerance must be positive");
    }

    /// The reference chain uses seed_base itself; evaluation paths use seed_base + 1..paths.
    std::uint64_t reference_seed() const noexcept { return seed_base; }
    std::uint64_t path_seed(std::uint64_t p) const noexcept { return seed_base + p; }
};

struct ErrorRow {
    std::uint64_t k = 0;
    double mean_sq_error = 0.0;
};

struct ErrorTable {
    Method method = Method::spi;
    std::size_t resolution = 0;
    std::vector<ErrorRow> rows;
    double initial_sq_error = 0.0; // ||w^1 - w*||^2 with w^1 = 0
};

/// Runs fn(i) for i in [0, count) on a small worker pool. Results must be
/// written to per-index slots; the first exception is rethrown.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                         unsigned threads = 0)
{
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                }
            }
        });
    }
    pool.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

inline Problem make_problem(const RunConfig& config, std::size_t resolution)
{
    return Problem(generate_dataset(config.n, resolution, config.dataset_seed), config.lambda);
}

/// SPI run of reference_multiplier * steps steps on the reference seed.
inline ParamState compute_reference(const Problem& problem, const RunConfig& config)
{
    const ChainOptions options{config.reference_multiplier * config.steps,
                               config.reference_multiplier * config.steps, config.tolerance};
    return run_chain_with(problem, Method::spi, Schedule(config.eta), options,
                          config.reference_seed(), [](std::uint64_t, const ParamState&) {});
}

inline ErrorTable run_experiment(const Problem& problem, const RunConfig& config, Method method,
                                 const ParamState& reference)
{
    const std::uint64_t count = config.steps / config.checkpoint_every;
    const Schedule schedule(config.eta);
    const ChainOptions options{config.steps, config.checkpoint_every, config.tolerance};

    std::vector<std::vector<double>> per_path(config.paths, std::vector<double>(count, 0.0));
    parallel_for(
        config.paths,
        [&](std::size_t p) {
            std::size_t idx = 0;
            auto& errors = per_path[p];
            run_chain_with(problem, method, schedule, options, config.path_seed(p + 1),
                           [&](std::uint64_t, const ParamState& s) {
                               errors[idx++] = squared_distance(s, reference);
                           });
        },
        config.threads);

    ErrorTable table;
    table.method = method;
    table.resolution = problem.resolution();
    table.initial_sq_error = squared_distance(ParamState::zeros(problem.resolution()), reference);
    table.rows.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        double sum = 0.0;
        for (const auto& path : per_path) { // fixed order: bitwise reproducible
            sum += path[i];
        }
        const double mean = sum / static_cast<double>(config.paths);
        table.rows[i] = {(i + 1) * config.checkpoint_every,
                         std::isfinite(mean) ? mean : std::numeric_limits<double>::infinity()};
    }
    return table;
}

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

/// Least-squares fit of log(error) = intercept + slope * log(k) over k >= k_min.
/// Non-positive and non-finite errors are skipped.
inline RateFit estimate_rate(std::span<const ErrorRow> rows, std::uint64_t k_min)
{
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t m = 0;
    for (const auto& row : rows) {
        if (row.k < k_min || row.k == 0 || !(row.mean_sq_error > 0.0)
            || !std::isfinite(row.mean_sq_error)) {
            continue;
        }
        const double x = std::log(static_cast<double>(row.k));
        const double y = std::log(row.mean_sq_error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2) {
        throw std::invalid_argument("estimate_rate: fewer than two usable checkpoints");
    }
    const double md = static_cast<double>(m);
    const double denom = md * sxx - sx * sx;
    if (!(denom > 0.0)) {
        throw std::invalid_argument("estimate_rate: checkpoints must span distinct k");
    }
    RateFit fit;
    fit.slope = (md * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / md;
    fit.points = m;
    return fit;
}

inline RateFit estimate_rate(const ErrorTable& table, std::uint64_t k_min)
{
    return estimate_rate(std::span<const ErrorRow>(table.rows), k_min);
}

struct MethodComparison {
    std::size_t resolution = 0;
    double spi_final = 0.0;
    double sgd_final = 0.0;
    double ratio = 0.0;       // sgd_final / spi_final
    bool sgd_diverged = false; // SGD final error above its initial error
};

inline MethodComparison compare_tables(const ErrorTable& spi_table, const ErrorTable& sgd_table)
{
    if (spi_table.rows.empty() || sgd_table.rows.empty()
        || spi_table.resolution != sgd_table.resolution
        || spi_table.rows.back().k != sgd_table.rows.back().k) {
        throw std::invalid_argument("compare_tables: tables are not comparable");
    }
    MethodComparison c;
    c.resolution = spi_table.resolution;
    c.spi_final = spi_table.rows.back().mean_sq_error;
    c.sgd_final = sgd_table.rows.back().mean_sq_error;
    c.ratio = c.spi_final > 0.0 ? c.sgd_final / c.spi_final
                                : (c.sgd_final > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    c.sgd_diverged = !(c.sgd_final <= sgd_table.initial_sq_error);
    return c;
}

/// Everything computed for one resolution.
struct ResolutionResult {
    std::size_t resolution = 0;
    ParamState reference;
    double reference_gradient_norm = 0.0;
    std::vector<ErrorTable> tables; // one per requested method, in request order
};

/// Runs every resolution of the config. Resolutions execute in parallel; paths
/// inside a resolution run serially so the worker count stays bounded.
inline std::vector<ResolutionResult> run_suite(const RunConfig& config,
                                               const std::vector<Method>& methods)
{
    config.validate();
    std::vector<ResolutionResult> results(config.resolutions.size());
    RunConfig inner_config = config;
    inner_config.threads = 1;
    parallel_for(
        config.resolutions.size(),
        [&](std::size_t i) {
            const auto problem = make_problem(config, config.resolutions[i]);
            auto& out = results[i];
            out.resolution = config.resolutions[i];
            out.reference = compute_reference(problem, config);
            out.reference_gradient_norm = norm(full_gradient(problem, out.reference));
            for (auto m : methods) {
                out.tables.push_back(run_experiment(problem, inner_config, m, out.reference));
            }
        },
        config.threads);
    return results;
}

inline std::vector<MethodComparison> compare_methods(const RunConfig& config)
{
    const auto results = run_suite(config, {Method::spi, Method::sgd});
    std::vector<MethodComparison> out;
    for (const auto& r : results) {
        out.push_back(compare_tables(r.tables[0], r.tables[1]));
    }
    return out;
}

} // namespace spi

#endif
