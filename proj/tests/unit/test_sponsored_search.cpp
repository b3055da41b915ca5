#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gtml/errors.hpp"
#include "gtml/markov.hpp"
#include "gtml/sponsored_search.hpp"
#include "oracles.hpp"

using namespace gtml;

TEST(Gsp, RevenueMatchesOperationalRules) {
    const std::vector<double> levels{0.0, 0.5, 1.0, 1.5, 2.0, 3.0};
    Rng rng(1);
    std::size_t checked = 0;
    for (int n_adv = 1; n_adv <= 4; ++n_adv) {
        for (int rep = 0; rep < 400; ++rep) {
            std::vector<double> bids(static_cast<std::size_t>(n_adv));
            for (auto& b : bids) b = levels[rng() % levels.size()];
            const auto profile = gsp::BidProfile::from_bids(bids);
            for (double r : levels) {
                for (std::uint8_t c1 : {0, 1}) {
                    for (std::uint8_t c2 : {0, 1}) {
                        EXPECT_NEAR(gsp::gsp_revenue(r, profile.top, {c1, c2}),
                                    oracle::gsp_revenue(bids, r, {c1, c2}), 1e-12);
                        ++checked;
                    }
                }
            }
        }
    }
    EXPECT_GE(checked, 4000u);
}

TEST(Gsp, PiecewiseCasesAndTies) {
    const gsp::TopBids top{3.0, 2.0, 1.0};
    EXPECT_DOUBLE_EQ(gsp::gsp_revenue(0.5, top, {1, 1}), 2.0 + 1.0);
    EXPECT_DOUBLE_EQ(gsp::gsp_revenue(1.5, top, {1, 1}), 2.0 + 1.5);
    EXPECT_DOUBLE_EQ(gsp::gsp_revenue(2.5, top, {1, 1}), 2.5);
    EXPECT_DOUBLE_EQ(gsp::gsp_revenue(3.5, top, {1, 1}), 0.0);
    // Reserve equal to a bid keeps that ad in.
    EXPECT_DOUBLE_EQ(gsp::gsp_revenue(2.0, top, {1, 1}), 2.0 + 2.0);
    EXPECT_DOUBLE_EQ(gsp::gsp_revenue(3.0, top, {1, 1}), 3.0);
    EXPECT_DOUBLE_EQ(gsp::gsp_revenue(1.0, top, {0, 1}), 1.0);
    EXPECT_EQ(gsp::shown_ads(2.0, top), 2);
    EXPECT_EQ(gsp::shown_ads(2.0001, top), 1);
    EXPECT_THROW(gsp::gsp_revenue(-0.1, top, {1, 1}), InputError);
    // Equal top bids: second slot pays the tied bid.
    EXPECT_DOUBLE_EQ(gsp::gsp_revenue(0.0, {2.0, 2.0, 2.0}, {1, 1}), 4.0);
}

TEST(Gsp, SignalIndexing) {
    EXPECT_EQ(gsp::signal_index(0, 0), 0u);
    EXPECT_EQ(gsp::signal_index(1, 1), 4u);
    EXPECT_EQ(gsp::signal_index(2, 2), 8u);
    EXPECT_EQ(gsp::signal_index(1, 2), 4u);
    const auto labels = gsp::signal_labels();
    ASSERT_EQ(labels.size(), gsp::kNumSignals);
    EXPECT_EQ(labels[5], "s1c2");
    EXPECT_EQ(labels[7], "s2c1");
}

TEST(Auction, ProfilesLabelsAndSpace) {
    gsp::Auction auction(fixture::two_query_spec());
    ASSERT_EQ(auction.profiles().size(), 8u);
    const auto labels = auction.behavior_labels();
    EXPECT_EQ(labels.front(), "0.5_0.5_0.5");
    EXPECT_EQ(labels[1], "0.5_0.5_2");
    EXPECT_EQ(labels.back(), "2_2_2");
    EXPECT_DOUBLE_EQ(auction.max_bid(), 2.0);
    EXPECT_DOUBLE_EQ(auction.loss_bound(), 4.0);
    EXPECT_EQ(auction.mechanism_space().size(), 36u);
    EXPECT_THROW(auction.check_mechanism(Mechanism{{0.5}}), InputError);
    EXPECT_THROW(auction.check_mechanism(Mechanism{{0.5, 2.5}}), InputError);
    EXPECT_THROW(auction.mechanism_space({0.0, 3.0}), InputError);
    auto bad = fixture::two_query_spec();
    bad.reserve_grid = {2.5};
    EXPECT_THROW(gsp::Auction{bad}, InputError);
}

TEST(Auction, EnvironmentCallbacksMatchOracle) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    for (const auto& a : auction.mechanism_space().members) {
        for (BehaviorId b = 0; b < 8; ++b) {
            const auto& bids = auction.profiles()[b].bids;
            for (const auto& atom : env.users.support()) {
                const auto& u = atom.sample;
                const double r = a.params[u.query];
                const double rev = oracle::gsp_revenue(bids, r, {u.clicks[0], u.clicks[1]});
                EXPECT_NEAR(env.loss.eval(a, b, u), -rev, 1e-12);
                EXPECT_GE(env.loss.eval(a, b, u), -env.loss.bound);
                int shown = 0;
                for (double x : bids) shown += x >= r;
                shown = std::min(shown, 2);
                const int clicks = (shown >= 1 ? u.clicks[0] : 0) + (shown >= 2 ? u.clicks[1] : 0);
                EXPECT_EQ(env.signal.eval(a, b, u), static_cast<SignalId>(shown * 3 + clicks));
            }
        }
    }
}

TEST(TrueModel, FloorStochasticityAndDeterminism) {
    gsp::TrueModelSpec spec;
    spec.floor = 0.05;
    const auto m = gsp::make_true_model(spec, 123);
    EXPECT_TRUE(validate_model(m).empty());
    for (const auto& mat : m.matrices()) EXPECT_GE(mat.minCoeff(), 0.05 - 1e-15);
    const auto again = gsp::make_true_model(spec, 123);
    EXPECT_EQ(fingerprint(m), fingerprint(again));
    EXPECT_NE(fingerprint(m), fingerprint(gsp::make_true_model(spec, 124)));

    spec.signal_independent = true;
    const auto si = gsp::make_true_model(spec, 7);
    for (const auto& mat : si.matrices()) EXPECT_EQ(mat, si.matrix(0));

    spec.floor = 0.2;
    EXPECT_THROW(gsp::make_true_model(spec, 1), InputError);
    spec.floor = 0.01;
    spec.concentration = 0.0;
    EXPECT_THROW(gsp::make_true_model(spec, 1), InputError);
}
