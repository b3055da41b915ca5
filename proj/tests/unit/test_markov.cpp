#include <gtest/gtest.h>

#include <set>
#include <tuple>

#include "fixtures.hpp"
#include "gtml/errors.hpp"
#include "gtml/markov.hpp"
#include "oracles.hpp"

using namespace gtml;

namespace {

Matrix random_stochastic(Eigen::Index n, Rng& rng) {
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) s += (m(i, j) = 0.05 + uniform01(rng));
        m.row(i) /= s;
    }
    return m;
}

// Kernel by direct enumeration of the user support through the signal callback.
Matrix brute_kernel(const BehaviorModel& model, const Mechanism& a, const Environment& env) {
    const auto n = static_cast<Eigen::Index>(model.num_behaviors());
    Matrix k = Matrix::Zero(n, n);
    for (Eigen::Index b = 0; b < n; ++b) {
        for (const auto& atom : env.users.support()) {
            const auto h = env.signal.eval(a, static_cast<BehaviorId>(b), atom.sample);
            for (Eigen::Index c = 0; c < n; ++c) k(b, c) += atom.prob * model.matrix(h)(b, c);
        }
    }
    return k;
}

}  // namespace

TEST(Stationary, TwoStateClosedForm) {
    for (double p : {0.1, 0.5, 0.9}) {
        for (double q : {0.2, 0.7}) {
            Matrix P(2, 2);
            P << 1 - p, p, q, 1 - q;
            auto pi = stationary_distribution(P);
            EXPECT_NEAR(pi.probs(0), q / (p + q), 1e-10);
            EXPECT_NEAR(pi.probs(1), p / (p + q), 1e-10);
            EXPECT_LE(pi.residual, 1e-12);
        }
    }
}

TEST(Stationary, MatchesLinearSolve) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix P = random_stochastic(2 + trial % 7, rng);
        const Vector expect = oracle::stationary_lu(P);
        const auto pi = stationary_distribution(P);
        EXPECT_LE((pi.probs - expect).lpNorm<Eigen::Infinity>(), 1e-10);
    }
}

TEST(Stationary, TransientStatesGetZeroMass) {
    Matrix P(3, 3);
    P << 0.2, 0.4, 0.4,
         0.0, 0.5, 0.5,
         0.0, 0.3, 0.7;
    auto pi = stationary_distribution(P);
    EXPECT_NEAR(pi.probs(0), 0.0, 1e-10);
    EXPECT_NEAR(pi.probs(1), 0.375, 1e-10);
}

TEST(Stationary, RejectsPeriodicAndReducible) {
    Matrix flip(2, 2);
    flip << 0, 1, 1, 0;
    EXPECT_THROW(stationary_distribution(flip), NotErgodicError);
    EXPECT_THROW(stationary_distribution(Matrix::Identity(3, 3)), NotErgodicError);
    Matrix cycle = Matrix::Zero(3, 3);
    cycle(0, 1) = cycle(1, 2) = cycle(2, 0) = 1.0;
    EXPECT_THROW(stationary_distribution(cycle), NotErgodicError);
}

TEST(Stationary, IterationCapRaisesConvergenceError) {
    Matrix P(2, 2);
    P << 0.9999, 0.0001, 0.001, 0.999;
    StationaryOptions opts;
    opts.max_iters = 3;
    try {
        stationary_distribution(P, opts);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_GT(e.residual(), 0.0);
    }
}

TEST(Kernel, OverloadsAgreeWithEnumeration) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    const auto model = fixture::random_model(8, 5);
    for (const auto& a : auction.mechanism_space().members) {
        const Matrix expect = brute_kernel(model, a, env);
        const auto k1 = marginal_kernel(model, a, env);
        const auto k2 = marginal_kernel(model, a, env.signal, env.users);
        const Matrix k3 = marginal_kernel(model, MechanismTable(env, a));
        EXPECT_LE((k1.matrix - expect).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LE((k2.matrix - expect).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LE((k3 - expect).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_EQ(k1.provenance.mechanism, a.key());
        EXPECT_EQ(k1.provenance.model, fingerprint(model));
    }
}

TEST(Risk, MatchesLinearSolveAndEnumeration) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    const auto model = fixture::random_model(8, 17);
    for (const auto& a : auction.mechanism_space().members) {
        const Vector pi = oracle::stationary_lu(brute_kernel(model, a, env));
        double expect = 0.0;
        for (BehaviorId b = 0; b < 8; ++b) {
            for (const auto& atom : env.users.support()) {
                expect += pi(static_cast<Eigen::Index>(b)) * atom.prob * env.loss.eval(a, b, atom.sample);
            }
        }
        EXPECT_NEAR(exact_risk(a, model, env), expect, 1e-10);
        EXPECT_NEAR(exact_risk(a, model, env.loss, env.signal, env.users), expect, 1e-10);
    }
}

TEST(Simulate, DeterministicPerSeed) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto model = fixture::random_model(8, 1);
    const Mechanism a{{0.0, 2.0}};
    auto t1 = simulate(model, a, auction.environment(), 500, {}, 42);
    auto t2 = simulate(model, a, auction.environment(), 500, {}, 42);
    auto t3 = simulate(model, a, auction.environment(), 500, {}, 43);
    ASSERT_EQ(t1.size(), 500u);
    bool differs = false;
    for (std::size_t t = 0; t < 500; ++t) {
        EXPECT_EQ(t1.records[t].behavior, t2.records[t].behavior);
        EXPECT_EQ(t1.records[t].user, t2.records[t].user);
        differs |= t1.records[t].behavior != t3.records[t].behavior;
    }
    EXPECT_TRUE(differs);
}

TEST(Simulate, SignalsFollowTheMechanism) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    const auto model = fixture::random_model(8, 2);
    const Mechanism a{{0.8, 1.2}};
    auto traj = simulate(model, a, env, 2000, {}, 9);
    for (const auto& r : traj.records) EXPECT_EQ(r.signal, env.signal.eval(a, r.behavior, r.user));
}

TEST(Simulate, TransitionFrequenciesMatchKernel) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    const auto model = fixture::random_model(8, 3);
    const Mechanism a{{0.4, 0.4}};
    auto traj = simulate(model, a, env, 400000, {}, 5);
    const Matrix k = marginal_kernel(model, a, env).matrix;
    Matrix counts = Matrix::Zero(8, 8);
    for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
        counts(static_cast<Eigen::Index>(traj.records[t].behavior),
               static_cast<Eigen::Index>(traj.records[t + 1].behavior)) += 1.0;
    }
    for (Eigen::Index b = 0; b < 8; ++b) {
        const double n = counts.row(b).sum();
        ASSERT_GT(n, 1000.0);
        for (Eigen::Index c = 0; c < 8; ++c) {
            const double p = k(b, c);
            EXPECT_NEAR(counts(b, c) / n, p, 5.0 * std::sqrt(p * (1 - p) / n) + 1e-9);
        }
    }
}

TEST(Simulate, StationaryStartHasStationaryLaw) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    const auto model = fixture::random_model(8, 4);
    const Mechanism a{{0.0, 2.0}};
    const Vector pi = stationary_distribution(marginal_kernel(model, a, env)).probs;
    const int runs = 20000;
    Vector freq = Vector::Zero(8);
    for (int s = 0; s < runs; ++s) {
        freq(static_cast<Eigen::Index>(simulate(model, a, env, 1, {}, s).records[0].behavior)) += 1.0 / runs;
    }
    for (Eigen::Index b = 0; b < 8; ++b) {
        EXPECT_NEAR(freq(b), pi(b), 5.0 * std::sqrt(pi(b) * (1 - pi(b)) / runs));
    }
}

TEST(Simulate, FixedStartAndInputChecks) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    const auto model = fixture::random_model(8, 4);
    SimulationOptions fixed{InitMode::fixed, 6, 0, {}};
    EXPECT_EQ(simulate(model, Mechanism{{0.0, 0.0}}, env, 3, fixed, 1).records[0].behavior, 6u);
    fixed.initial = 8;
    EXPECT_THROW(simulate(model, Mechanism{{0.0, 0.0}}, env, 3, fixed, 1), InputError);
    EXPECT_THROW(simulate(model, Mechanism{{0.0, 0.0}}, env, 0, {}, 1), InputError);
    EXPECT_THROW(simulate(BehaviorModel::uniform(8, 2), Mechanism{{0.0, 0.0}}, env, 3, {}, 1),
                 InputError);
}

TEST(Certificate, MatchesExplicitAugmentedChain) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto model = fixture::random_model(8, seed, 0.005);
        for (const Mechanism& a : {Mechanism{{0.0, 2.0}}, Mechanism{{1.2, 0.4}}}) {
            const MechanismTable table(env, a);
            const Matrix& q = table.signal_probs();
            // Explicit augmented states (next, cur, h) with positive one-step weight.
            std::vector<std::tuple<Eigen::Index, Eigen::Index, Eigen::Index>> states;
            for (Eigen::Index cur = 0; cur < 8; ++cur)
                for (Eigen::Index h = 0; h < q.cols(); ++h)
                    for (Eigen::Index nx = 0; nx < 8; ++nx)
                        if (q(cur, h) * model.matrix(static_cast<SignalId>(h))(cur, nx) > 0.0)
                            states.emplace_back(nx, cur, h);
            const auto S = static_cast<Eigen::Index>(states.size());
            Matrix A = Matrix::Zero(S, S);
            for (Eigen::Index i = 0; i < S; ++i) {
                for (Eigen::Index j = 0; j < S; ++j) {
                    const auto [xn, xc, xh] = states[static_cast<std::size_t>(i)];
                    const auto [yn, yc, yh] = states[static_cast<std::size_t>(j)];
                    if (yc == xn) A(i, j) = q(yc, yh) * model.matrix(static_cast<SignalId>(yh))(yc, yn);
                }
            }
            std::size_t n0 = 0;
            double delta0 = 0.0;
            Matrix power = A;
            for (std::size_t n = 1; n <= 20; ++n) {
                if (power.minCoeff() > 0.0) {
                    n0 = n;
                    delta0 = power.minCoeff();
                    break;
                }
                power = power * A;
            }
            ASSERT_GT(n0, 0u);
            const auto cert = ergodicity_certificate(model, env.signal, a, env.users, 20);
            EXPECT_EQ(cert.n0, n0);
            EXPECT_NEAR(cert.delta0, delta0, 1e-9 * delta0);
            EXPECT_EQ(cert.augmented_states, states.size());
            EXPECT_GE(cert.n0, 2u);
        }
    }
}

TEST(Certificate, FailsForPeriodicChains) {
    // Deterministic alternation between two behaviors never mixes.
    BehaviorSpace b({"x", "y"});
    SignalSpace h({"only"});
    Environment env{b, h, UserDistribution({{"q", 1.0, {0.0, 0.0}}}),
                    {[](const Mechanism&, BehaviorId, const UserSample&) { return SignalId{0}; }},
                    {1.0, [](const Mechanism&, BehaviorId, const UserSample&) { return 0.0; }}};
    Matrix flip(2, 2);
    flip << 0, 1, 1, 0;
    BehaviorModel model(2, {flip});
    EXPECT_THROW(ergodicity_certificate(model, env.signal, Mechanism{{0.0}}, env.users, 50),
                 NotErgodicError);
    EXPECT_THROW(ergodicity_certificate(model, env.signal, Mechanism{{0.0}}, env.users, 0), InputError);
}

TEST(Distances, ModelInfDistanceAndMask) {
    Matrix a(2, 2), b(2, 2);
    a << 0.5, 0.5, 0.2, 0.8;
    b << 0.7, 0.3, 0.2, 0.8;
    BehaviorModel m1(2, {a, a}), m2(2, {a, b});
    EXPECT_DOUBLE_EQ(model_inf_distance(m1, m2), 0.4);
    CellMask mask{{true, true}, {false, true}};
    EXPECT_DOUBLE_EQ(model_inf_distance(m1, m2, mask), 0.0);
    EXPECT_THROW(model_inf_distance(m1, m2, CellMask{{true, true}}), InputError);
    Vector p(3), q(3);
    p << 0.5, 0.5, 0.0;
    q << 0.0, 0.5, 0.5;
    EXPECT_DOUBLE_EQ(tv_distance(p, q), 0.5);
}

TEST(Distances, ReachableCellsAreThoseWithPositiveSignalProbability) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    const auto model = fixture::random_model(8, 8);
    const Mechanism a{{0.0, 2.0}};
    const auto mask = reachable_cells(model, MechanismTable(env, a));
    std::set<std::pair<SignalId, BehaviorId>> seen;
    for (BehaviorId b = 0; b < 8; ++b)
        for (const auto& atom : env.users.support())
            if (atom.prob > 0.0) seen.emplace(env.signal.eval(a, b, atom.sample), b);
    for (SignalId h = 0; h < 9; ++h)
        for (BehaviorId b = 0; b < 8; ++b) EXPECT_EQ(mask[h][b], seen.contains({h, b}));
}
