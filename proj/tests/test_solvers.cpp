#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "spi/solvers.hpp"
#include "spi/verify.hpp"

using namespace spi;

namespace {

/// Independent oracle: plain bisection on an increasing function.
template <typename F>
double bisect(F f, double lo, double hi, double tol)
{
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Sample zero_sample(std::size_t n, Label y = Label::trigonometric)
{
    return Sample(GridFunction::zeros(n), y);
}

} // namespace

TEST(Schedule, StepSizes)
{
    const Schedule harmonic(2000.0);
    EXPECT_EQ(step_size(harmonic, 1), 2000.0);
    EXPECT_EQ(step_size(harmonic, 1000), 2.0);
    for (std::uint64_t k : {1u, 7u, 100u, 12345u}) {
        EXPECT_DOUBLE_EQ(harmonic.step_size(k) * static_cast<double>(k), 2000.0);
    }
    const Schedule square(3.0, DecayRule::square_summable);
    EXPECT_DOUBLE_EQ(square.step_size(10), 0.03);
    EXPECT_THROW(harmonic.step_size(0), std::invalid_argument);
    EXPECT_THROW(Schedule(-1.0), std::invalid_argument);
    double prev = INFINITY;
    for (std::uint64_t k = 1; k < 100; ++k) {
        EXPECT_GT(harmonic.step_size(k), 0.0);
        EXPECT_LE(harmonic.step_size(k), prev);
        prev = harmonic.step_size(k);
    }
}

TEST(SpiResidual, Examples)
{
    const auto s = zero_sample(4);
    const auto zero = ParamState::zeros(4);
    EXPECT_DOUBLE_EQ(spi_residual(0.0, zero, s, 3.0, 0.1), -1.5);
    Rng rng(1, StreamDomain::sweep);
    const auto st = random_state(rng, 4);
    const auto data = generate_dataset(2, 4, 3);
    for (double c : {-2.0, 0.0, 0.7}) {
        EXPECT_EQ(spi_residual(c, st, data[0], 0.0, 0.1), c);
    }
}

TEST(SpiResidual, StrictlyIncreasing)
{
    const auto data = generate_dataset(20, 16, 5);
    Rng rng(2, StreamDomain::sweep);
    for (int t = 0; t < 500; ++t) {
        const auto st = random_state(rng, 16);
        const auto& s = data[rng.below(data.size())];
        const double alpha = random_step(rng);
        const double c1 = rng.uniform(-alpha, alpha);
        const double c2 = c1 + rng.uniform(1e-6, 1.0) * alpha;
        EXPECT_LT(spi_residual(c1, st, s, alpha, 1e-3), spi_residual(c2, st, s, alpha, 1e-3));
    }
}

TEST(SolveCk, AgainstBisectionOracle)
{
    // state = 0, x = 0, y = 1, alpha = 1, lambda -> 0: c = 1/(1 + e^c).
    const double oracle = bisect([](double c) { return c - 1.0 / (1.0 + std::exp(c)); }, 0.0, 1.0,
                                 1e-13);
    EXPECT_NEAR(oracle, 0.401058137541547, 1e-12);
    const double c = solve_ck(ParamState::zeros(3), zero_sample(3), 1.0, 1e-300);
    EXPECT_NEAR(c, oracle, 1e-12);
}

TEST(SolveCk, ZeroStepAndSign)
{
    const auto data = generate_dataset(4, 8, 1);
    EXPECT_EQ(solve_ck(ParamState::zeros(8), data[0], 0.0, 1e-3), 0.0);
    const auto zero = ParamState::zeros(8);
    for (std::size_t j = 0; j < data.size(); ++j) {
        const double c = solve_ck(zero, data[j], 5.0, 1e-3);
        EXPECT_EQ(std::signbit(c), data[j].y == Label::polynomial);
        EXPECT_NE(c, 0.0);
    }
}

TEST(SolveCk, RootWithinBracketAndTolerance)
{
    const auto data = generate_dataset(40, 32, 9);
    Rng rng(3, StreamDomain::sweep);
    for (int t = 0; t < 1000; ++t) {
        const auto st = random_state(rng, 32);
        const auto& s = data[rng.below(data.size())];
        const double alpha = random_step(rng);
        const double c = solve_ck(st, s, alpha, 1e-3);
        EXPECT_LE(std::abs(c), alpha);
        EXPECT_LE(std::abs(spi_residual(c, st, s, alpha, 1e-3)), 1e-12);
        // Cross-check against bisection on the same equation.
        const double ref = bisect([&](double cc) { return spi_residual(cc, st, s, alpha, 1e-3); },
                                  -alpha, alpha, 1e-13 * std::max(1.0, alpha));
        EXPECT_NEAR(c, ref, 1e-10 * std::max(1.0, alpha));
    }
}

TEST(SolveScalar, EscapesNewtonCycle)
{
    // Without damping, Newton alternates between c ~ -97 and c ~ -2.7 here.
    const double xx = 0.11862871169413913, wx = 0.12852446675791815;
    const double a = std::sqrt(2.0 * xx); // N = 1: <u,v> = u v / 2
    const Sample s(GridFunction(std::vector<double>{a}), Label::polynomial);
    const ParamState st{GridFunction(std::vector<double>{2.0 * wx / a}), 3.4671626878061286};
    const double alpha = 153.84513295287343;
    const ScalarEquation phi(st, s, alpha, 1e-3, 0.0);
    const double c = solve_scalar(phi);
    EXPECT_LE(std::abs(phi(c)), 1e-12);
    const double ref = bisect(phi, -alpha, alpha, 1e-11);
    EXPECT_NEAR(c, ref, 1e-10);
}

TEST(SolveScalar, ConvergesWithAndWithoutBiasCoupling)
{
    // Large steps with a weakly coupled equation make undamped Newton cycle.
    const auto data = generate_dataset(200, 64, 12345);
    Rng rng(10, StreamDomain::sweep);
    for (int t = 0; t < 3000; ++t) {
        const auto& s = data[rng.below(data.size())];
        const double alpha = random_step(rng);
        const auto st = random_state(rng, 64);
        for (double coupling : {0.0, 1.0}) {
            const ScalarEquation phi(st, s, alpha, 1e-3, coupling);
            const double c = solve_scalar(phi);
            ASSERT_LE(std::abs(phi(c)), 1e-12) << "trial " << t << " coupling " << coupling;
        }
    }
}

TEST(SpiStep, ZeroStepIsIdentity)
{
    Rng rng(4, StreamDomain::sweep);
    const auto st = random_state(rng, 10);
    const auto data = generate_dataset(2, 10, 1);
    EXPECT_EQ(spi_step(st, data[1], 0.0, 1e-3), st);
}

TEST(SpiStep, PureRidgeShrinks)
{
    // x = 0: the loss part only moves the bias, and w is the ridge prox w / (1 + alpha*lambda).
    Rng rng(5, StreamDomain::sweep);
    const auto st = random_state(rng, 10);
    const double alpha = 3.0, lambda = 0.25;
    const auto next = spi_step(st, zero_sample(10), alpha, lambda);
    EXPECT_NEAR(rms_norm(next.w - (1.0 / (1.0 + alpha * lambda)) * st.w), 0.0, 1e-15);
}

TEST(SpiStep, SatisfiesImplicitEquation)
{
    const auto data = generate_dataset(50, 40, 21);
    Rng rng(6, StreamDomain::sweep);
    for (int t = 0; t < 100; ++t) {
        const auto st = random_state(rng, 40);
        const auto& s = data[rng.below(data.size())];
        const double alpha = random_step(rng);
        const auto next = spi_step(st, s, alpha, 1e-3);
        EXPECT_LE(implicit_residual(st, next, s, alpha, 1e-3), 1e-10);
    }
}

TEST(SpiStep, NonExpansiveAndFrozenBiasContraction)
{
    const auto data = generate_dataset(50, 24, 22);
    Rng rng(7, StreamDomain::sweep);
    for (int t = 0; t < 300; ++t) {
        const auto u = random_state(rng, 24);
        const auto v = random_state(rng, 24);
        const auto& s = data[rng.below(data.size())];
        const double alpha = random_step(rng);
        const double lambda = std::exp(rng.uniform(std::log(1e-4), 0.0));
        EXPECT_LE(norm(spi_step(u, s, alpha, lambda) - spi_step(v, s, alpha, lambda)),
                  norm(u - v) + 1e-10);
        const ParamState vb{v.w, u.bias};
        const auto fu = spi_step_frozen_bias(u, s, alpha, lambda);
        const auto fv = spi_step_frozen_bias(vb, s, alpha, lambda);
        EXPECT_EQ(fu.bias, u.bias);
        EXPECT_LE(rms_norm(fu.w - fv.w), rms_norm(u.w - v.w) / (1.0 + alpha * lambda) + 1e-10);
    }
}

TEST(SgdStep, Examples)
{
    Rng rng(8, StreamDomain::sweep);
    const auto st = random_state(rng, 6);
    const auto data = generate_dataset(2, 6, 2);
    EXPECT_EQ(sgd_step(st, data[0], 0.0, 0.1), st);

    const auto next = sgd_step(ParamState::zeros(6), data[1], 0.8, 0.1);
    EXPECT_DOUBLE_EQ(next.bias, 0.4);

    const double alpha = 0.3, lambda = 0.5;
    const auto ridge_only = sgd_step(st, zero_sample(6), alpha, lambda);
    EXPECT_NEAR(rms_norm(ridge_only.w - (1.0 - alpha * lambda) * st.w), 0.0, 1e-15);
}

TEST(SgdStep, IsExplicitGradientStep)
{
    const auto data = generate_dataset(10, 12, 4);
    Rng rng(9, StreamDomain::sweep);
    const auto st = random_state(rng, 12);
    const auto next = sgd_step(st, data[3], 0.7, 0.2);
    EXPECT_NEAR(norm(next - (st - 0.7 * sample_gradient(st, data[3], 0.2))), 0.0, 1e-14);
}

TEST(RunChain, ZeroFirstStepLeavesInitialState)
{
    const Problem p(generate_dataset(6, 8, 1), 1e-3);
    const auto r = run_chain(p, Method::spi, Schedule(0.0), {1, 1}, 5);
    EXPECT_EQ(r.final_state, ParamState::zeros(8));
    ASSERT_EQ(r.checkpoints.size(), 1u);
    EXPECT_EQ(r.checkpoints[0].k, 1u);
}

TEST(RunChain, DeterministicPerMethod)
{
    const Problem p(generate_dataset(20, 16, 3), 1e-3);
    for (auto m : {Method::spi, Method::sgd}) {
        const auto a = run_chain(p, m, Schedule(2000.0), {500, 100}, 77);
        const auto b = run_chain(p, m, Schedule(2000.0), {500, 100}, 77);
        EXPECT_EQ(a.final_state, b.final_state);
        ASSERT_EQ(a.checkpoints.size(), 5u);
        for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
            EXPECT_EQ(a.checkpoints[i].k, 100 * (i + 1));
            EXPECT_EQ(a.checkpoints[i].state, b.checkpoints[i].state);
        }
        const auto c = run_chain(p, m, Schedule(2000.0), {500, 100}, 78);
        EXPECT_FALSE(a.final_state == c.final_state);
    }
}

TEST(RunChain, PairedSampleStreams)
{
    SampleStream a(11, 37), b(11, 37);
    for (int i = 0; i < 1000; ++i) {
        EXPECT_EQ(a.next(), b.next());
    }
}

TEST(RunChain, RejectsZeroSteps)
{
    const Problem p(generate_dataset(2, 4, 1), 1e-3);
    EXPECT_THROW(run_chain(p, Method::spi, Schedule(1.0), {0, 1}, 1), std::invalid_argument);
    EXPECT_THROW(run_chain(p, Method::spi, Schedule(1.0), {10, 0}, 1), std::invalid_argument);
}

TEST(Method, Parsing)
{
    EXPECT_EQ(parse_method("spi"), Method::spi);
    EXPECT_EQ(parse_method("SGD"), Method::sgd);
    EXPECT_THROW(parse_method("adam"), std::invalid_argument);
}
