#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gtml/behavior_learning.hpp"
#include "gtml/errors.hpp"
#include "gtml/markov.hpp"

using namespace gtml;

namespace {

Trajectory hand_trajectory(std::vector<std::pair<BehaviorId, SignalId>> steps) {
    Trajectory t;
    for (auto [b, h] : steps) t.records.push_back({b, h, {}});
    return t;
}

// Mean log-likelihood straight from the materialized matrices.
double direct_ll(const ParametricFamily& f, const TransitionCounts& c, const std::vector<double>& w) {
    const auto m = f.materialize(w);
    double ll = 0.0;
    for (SignalId h = 0; h < f.num_signals(); ++h)
        for (BehaviorId b = 0; b < f.num_behaviors(); ++b)
            for (BehaviorId n = 0; n < f.num_behaviors(); ++n)
                if (c.count(h, b, n)) ll += static_cast<double>(c.count(h, b, n)) * std::log(m(h, b, n));
    return ll / static_cast<double>(c.total());
}

}  // namespace

TEST(Counts, TallyTransitionsUnderTheCurrentSignal) {
    auto t = hand_trajectory({{0, 1}, {1, 0}, {1, 1}, {0, 1}, {0, 0}});
    auto c = TransitionCounts::from(t, 2, 2);
    EXPECT_EQ(c.total(), 4u);
    EXPECT_EQ(c.count(1, 0, 1), 1u);
    EXPECT_EQ(c.count(0, 1, 1), 1u);
    EXPECT_EQ(c.count(1, 1, 0), 1u);
    EXPECT_EQ(c.count(1, 0, 0), 1u);
    EXPECT_EQ(c.row_total(1, 0), 2u);
    EXPECT_THROW(c.add(2, 0, 0), InputError);
}

TEST(Nonparametric, ConditionalFrequenciesAndFallback) {
    auto t = hand_trajectory({{0, 1}, {1, 0}, {1, 1}, {0, 1}, {0, 0}});
    auto [m, report] = fit_nonparametric(t, 2, 2);
    EXPECT_DOUBLE_EQ(m(1, 0, 0), 0.5);
    EXPECT_DOUBLE_EQ(m(1, 0, 1), 0.5);
    EXPECT_DOUBLE_EQ(m(0, 1, 1), 1.0);
    EXPECT_DOUBLE_EQ(m(1, 1, 0), 1.0);
    // Signal 0 never seen from behavior 0: uniform fallback, reported.
    ASSERT_EQ(report.fallback_cells.size(), 1u);
    EXPECT_EQ(report.fallback_cells[0], (std::pair<SignalId, BehaviorId>{0, 0}));
    EXPECT_DOUBLE_EQ(m(0, 0, 0), 0.5);
    EXPECT_TRUE(validate_model(m).empty());
    EXPECT_THROW(fit_nonparametric(hand_trajectory({{0, 0}}), 2, 2), InputError);
}

TEST(Nonparametric, ConsistentOnReachableCells) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    const auto model = fixture::random_model(8, 21);
    const Mechanism a{{0.0, 2.0}};
    const auto mask = reachable_cells(model, MechanismTable(env, a));
    double previous = 10.0;
    for (std::size_t T : {2000u, 200000u}) {
        auto traj = simulate(model, a, env, T, {}, 3);
        auto [fit, report] = fit_nonparametric(traj, 8, 9);
        const double err = model_inf_distance(model, fit, mask);
        EXPECT_LT(err, previous);
        previous = err;
    }
    EXPECT_LT(previous, 0.2);
}

TEST(Parametric, RowIsNormalizedGaussianKernel) {
    BehaviorSpace b({"a", "b", "c"});
    SignalSpace h({"x"});
    ParametricFamily f(b, h, {false, false, true});
    std::vector<double> row(3);
    f.row(0.3, row);
    const double e0 = std::exp(-0.09), e1 = std::exp(-0.04), e2 = std::exp(-0.49);
    EXPECT_NEAR(row[0], e0 / (e0 + e1 + e2), 1e-15);
    EXPECT_NEAR(row[1], e1 / (e0 + e1 + e2), 1e-15);
    EXPECT_EQ(f.dim(), 1u);
    EXPECT_THROW(ParametricFamily(b, h, {false, false, false}), InputError);
    EXPECT_THROW(ParametricFamily(BehaviorSpace({"a", "b"}, {{0, 1}, {1, 0}}), h), InputError);
}

TEST(Parametric, LikelihoodAndGradientMatchDirectEvaluation) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    ParametricFamily family(env.behaviors, env.signals);
    ASSERT_EQ(family.dim(), 3u);
    const std::vector<double> w_true{0.6, -0.4, 0.3};
    const auto model = family.materialize(w_true);
    auto counts = TransitionCounts::from(simulate(model, Mechanism{{0.0, 2.0}}, env, 5000, {}, 2), 8, 9);
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> w(3);
        for (auto& v : w) v = 4.0 * uniform01(rng) - 2.0;
        std::vector<double> grad;
        const double ll = family.log_likelihood(counts, w, &grad);
        EXPECT_NEAR(ll, direct_ll(family, counts, w), 1e-10);
        for (std::size_t k = 0; k < 3; ++k) {
            const double h = 1e-6;
            auto wp = w, wm = w;
            wp[k] += h;
            wm[k] -= h;
            const double fd = (direct_ll(family, counts, wp) - direct_ll(family, counts, wm)) / (2 * h);
            EXPECT_NEAR(grad[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(Parametric, OneDimensionalFitMatchesGridScan) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    ParametricFamily family(env.behaviors, env.signals, {false, false, true});
    const auto model = family.materialize(std::vector<double>{0.35});
    auto counts = TransitionCounts::from(simulate(model, Mechanism{{0.0, 2.0}}, env, 3000, {}, 8), 8, 9);
    double best_w = 0.0, best_ll = -1e300;
    for (int i = 0; i <= 40000; ++i) {
        const double w = -2.0 + 4.0 * i / 40000.0;
        const double ll = direct_ll(family, counts, {w});
        if (ll > best_ll) best_ll = ll, best_w = w;
    }
    MleOptions opts;
    opts.seed = 1;
    auto [pm, report] = fit_parametric(counts, family, opts);
    EXPECT_NEAR(pm.w[0], best_w, 2e-3);
    EXPECT_TRUE(report.converged) << report.diagnostic;
    EXPECT_FALSE(report.log_likelihood.empty());
}

TEST(Parametric, FitStaysInsideTheWeightBox) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    ParametricFamily family(env.behaviors, env.signals, {false, false, true});
    // Data generated far outside the box pushes the estimate onto the boundary.
    const auto model = family.materialize(std::vector<double>{3.0});
    auto traj = simulate(model, Mechanism{{0.0, 2.0}}, env, 2000, {}, 1);
    MleOptions opts;
    opts.bound = 0.5;
    auto [pm, report] = fit_parametric(traj, family, opts);
    EXPECT_NEAR(pm.w[0], 0.5, 1e-12);
    opts.restarts = 0;
    EXPECT_THROW(fit_parametric(traj, family, opts), InputError);
}

TEST(Parametric, RecoversWeightsFromLongTrajectory) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    ParametricFamily family(env.behaviors, env.signals);
    const std::vector<double> w_true{0.8, -0.5, 0.2};
    auto traj = simulate(family.materialize(w_true), Mechanism{{0.0, 2.0}}, env, 50000, {}, 6);
    auto [pm, report] = fit_parametric(traj, family, {});
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(pm.w[k], w_true[k], 0.1);
    EXPECT_TRUE(validate_model(materialize(pm)).empty());
}
