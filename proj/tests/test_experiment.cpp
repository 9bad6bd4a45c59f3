#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "spi/experiment.hpp"

using namespace spi;

namespace {

RunConfig small_config()
{
    RunConfig c;
    c.n = 20;
    c.resolutions = {16};
    c.steps = 2000;
    c.paths = 3;
    c.checkpoint_every = 100;
    c.reference_multiplier = 5;
    c.threads = 2;
    return c;
}

} // namespace

TEST(EstimateRate, ExactPowerLaw)
{
    std::vector<ErrorRow> rows;
    for (std::uint64_t k = 100; k <= 10000; k += 100) {
        rows.push_back({k, 5.0 / static_cast<double>(k)});
    }
    const auto fit = estimate_rate(rows, 1000);
    EXPECT_NEAR(fit.slope, -1.0, 1e-12);
    EXPECT_NEAR(fit.intercept, std::log(5.0), 1e-10);
    EXPECT_EQ(fit.points, 91u);
}

TEST(EstimateRate, ConstantAndDegenerateInputs)
{
    std::vector<ErrorRow> flat{{1000, 2.0}, {2000, 2.0}, {3000, 2.0}};
    EXPECT_NEAR(estimate_rate(flat, 1).slope, 0.0, 1e-14);
    EXPECT_THROW(estimate_rate(flat, 3000), std::invalid_argument);
    std::vector<ErrorRow> with_zero{{1000, 0.0}, {2000, 1.0}};
    EXPECT_THROW(estimate_rate(with_zero, 1), std::invalid_argument);
}

TEST(RunConfig, Validation)
{
    EXPECT_NO_THROW(RunConfig{}.validate());
    auto c = small_config();
    c.checkpoint_every = 300;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config();
    c.n = 7;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config();
    c.resolutions.clear();
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ParallelFor, VisitsEveryIndexAndPropagatesErrors)
{
    std::vector<int> hits(50, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
    for (int h : hits) {
        EXPECT_EQ(h, 1);
    }
    EXPECT_THROW(parallel_for(
                     10, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }, 3),
                 std::runtime_error);
}

TEST(RunExperiment, SinglePathEqualsSingleChain)
{
    auto c = small_config();
    c.paths = 1;
    const auto problem = make_problem(c, 16);
    const auto ref = compute_reference(problem, c);
    const auto table = run_experiment(problem, c, Method::spi, ref);
    const auto chain = run_chain(problem, Method::spi, Schedule(c.eta), {c.steps, c.checkpoint_every},
                                 c.path_seed(1));
    ASSERT_EQ(table.rows.size(), chain.checkpoints.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        EXPECT_EQ(table.rows[i].k, chain.checkpoints[i].k);
        EXPECT_EQ(table.rows[i].mean_sq_error, squared_distance(chain.checkpoints[i].state, ref));
    }
    EXPECT_EQ(table.rows.front().k, 100u);
    EXPECT_EQ(table.rows.back().k, c.steps);
    EXPECT_EQ(table.initial_sq_error, squared_distance(ParamState::zeros(16), ref));
}

TEST(RunExperiment, DeterministicRegardlessOfThreads)
{
    auto c = small_config();
    const auto problem = make_problem(c, 16);
    const auto ref = compute_reference(problem, c);
    const auto a = run_experiment(problem, c, Method::sgd, ref);
    c.threads = 1;
    const auto b = run_experiment(problem, c, Method::sgd, ref);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].mean_sq_error, b.rows[i].mean_sq_error);
    }
}

TEST(Reference, DeterministicAndImprovesWithLength)
{
    auto c = small_config();
    const auto problem = make_problem(c, 16);
    EXPECT_EQ(compute_reference(problem, c), compute_reference(problem, c));
    std::vector<double> grads;
    for (std::uint64_t m : {1u, 10u, 100u}) {
        c.reference_multiplier = m;
        grads.push_back(norm(full_gradient(problem, compute_reference(problem, c))));
    }
    EXPECT_LT(grads[1], grads[0]);
    EXPECT_LT(grads[2], grads[1]);
}

TEST(Reference, NearMinimizerOfObjective)
{
    auto c = small_config();
    c.reference_multiplier = 50;
    const auto problem = make_problem(c, 16);
    const auto ref = compute_reference(problem, c);
    const double f_ref = full_objective(problem, ref);
    // Strong convexity gives F(w) - F(w*) <= ||grad F(w)||^2 / (2 mu); the slack covers that gap.
    const double g = norm(full_gradient(problem, ref));
    const double slack = g * g / (2.0 * c.lambda) + 1e-12;
    Rng rng(5, StreamDomain::sweep);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> d(16);
        for (double& v : d) {
            v = rng.normal();
        }
        const ParamState dir{GridFunction(d), rng.normal()};
        const double scale = std::exp(rng.uniform(std::log(1e-2), std::log(10.0)));
        EXPECT_GE(full_objective(problem, ref + scale * dir), f_ref - slack);
    }
}

TEST(RunExperiment, SpiErrorDecreases)
{
    auto c = small_config();
    c.steps = 10000;
    c.paths = 4;
    const auto problem = make_problem(c, 16);
    const auto ref = compute_reference(problem, c);
    const auto t = run_experiment(problem, c, Method::spi, ref);
    EXPECT_LT(t.rows.back().mean_sq_error, t.rows.front().mean_sq_error);
    EXPECT_LT(t.rows.back().mean_sq_error, t.initial_sq_error);
}

TEST(CompareTables, SelfComparison)
{
    ErrorTable t;
    t.resolution = 8;
    t.rows = {{100, 4.0}, {200, 2.0}};
    t.initial_sq_error = 3.0;
    const auto c = compare_tables(t, t);
    EXPECT_EQ(c.ratio, 1.0);
    EXPECT_FALSE(c.sgd_diverged);
    t.initial_sq_error = 1.0;
    EXPECT_TRUE(compare_tables(t, t).sgd_diverged);
    ErrorTable other = t;
    other.resolution = 9;
    EXPECT_THROW(compare_tables(t, other), std::invalid_argument);
}

TEST(RunSuite, OneTablePerMethodAndResolution)
{
    auto c = small_config();
    c.resolutions = {8, 16};
    c.steps = 500;
    const auto results = run_suite(c, {Method::spi, Method::sgd});
    ASSERT_EQ(results.size(), 2u);
    for (std::size_t i = 0; i < results.size(); ++i) {
        EXPECT_EQ(results[i].resolution, c.resolutions[i]);
        ASSERT_EQ(results[i].tables.size(), 2u);
        EXPECT_EQ(results[i].tables[0].method, Method::spi);
        EXPECT_EQ(results[i].tables[1].method, Method::sgd);
        EXPECT_EQ(results[i].tables[0].rows.size(), 5u);
        EXPECT_TRUE(std::isfinite(results[i].reference_gradient_norm));
    }
}

TEST(RunChain, DeskScaleErrorDropsTenfold)
{
    RunConfig c;
    c.n = 1000;
    c.resolutions = {200};
    const auto problem = make_problem(c, 200);
    const auto ref = compute_reference(problem, c);
    const auto chain = run_chain(problem, Method::spi, Schedule(c.eta), {c.steps, c.steps},
                                 c.path_seed(1));
    const double initial = squared_distance(ParamState::zeros(200), ref);
    const double final_error = squared_distance(chain.final_state, ref);
    EXPECT_LE(10.0 * final_error, initial) << "initial " << initial << " final " << final_error;
}
