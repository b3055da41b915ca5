#include <gtest/gtest.h>

#include <map>

#include "gtml/core.hpp"
#include "gtml/errors.hpp"

using namespace gtml;

TEST(LabelSet, IndexesLabelsAndRejectsDuplicates) {
    BehaviorSpace b({"lo", "hi"});
    EXPECT_EQ(b.index_of("hi"), 1u);
    EXPECT_TRUE(b.contains("lo"));
    EXPECT_THROW(b.index_of("mid"), InputError);
    EXPECT_THROW(BehaviorSpace({"x", "x"}), InputError);
    EXPECT_THROW(BehaviorSpace({"only"}), InputError);
    EXPECT_NO_THROW(SignalSpace({"only"}));
}

TEST(LabelSet, DefaultEmbeddingSpansUnitInterval) {
    BehaviorSpace b({"a", "b", "c"});
    EXPECT_DOUBLE_EQ(b.embedding(0)[0], 0.0);
    EXPECT_DOUBLE_EQ(b.embedding(1)[0], 0.5);
    EXPECT_DOUBLE_EQ(b.embedding(2)[0], 1.0);
    EXPECT_THROW(BehaviorSpace({"a", "b"}, {{1.0}}), InputError);
    EXPECT_THROW(BehaviorSpace({"a", "b"}, {{1.0}, {1.0, 2.0}}), InputError);
}

TEST(UserDistribution, SupportProbabilitiesFactorize) {
    UserDistribution u({{"q1", 0.25, {0.5, 0.1}}, {"q2", 0.75, {1.0, 0.0}}});
    ASSERT_EQ(u.support().size(), 8u);
    double total = 0.0;
    for (const auto& a : u.support()) total += a.prob;
    EXPECT_NEAR(total, 1.0, 1e-15);
    // q1 with clicks (1, 0): 0.25 * 0.5 * 0.9
    EXPECT_EQ(u.support()[2].sample.query, 0u);
    EXPECT_EQ(u.support()[2].sample.clicks[0], 1);
    EXPECT_EQ(u.support()[2].sample.clicks[1], 0);
    EXPECT_NEAR(u.support()[2].prob, 0.1125, 1e-15);
    // q2 never clicks slot 2 and always clicks slot 1
    EXPECT_NEAR(u.support()[6].prob, 0.75, 1e-15);
}

TEST(UserDistribution, RejectsBadInputs) {
    EXPECT_THROW(UserDistribution({}), InputError);
    EXPECT_THROW(UserDistribution({{"q", 0.9, {0.5, 0.5}}}), InputError);
    EXPECT_THROW(UserDistribution({{"q", 1.0, {1.5, 0.5}}}), InputError);
    EXPECT_THROW(UserDistribution({{"a", -0.5, {0, 0}}, {"b", 1.5, {0, 0}}}), InputError);
}

TEST(UserDistribution, SamplingMatchesSupportFrequencies) {
    UserDistribution u({{"q1", 0.3, {0.5, 0.2}}, {"q2", 0.7, {0.1, 0.9}}});
    Rng rng(7);
    const std::size_t n = 200000;
    std::vector<double> freq(u.support().size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) freq[u.sample_index(rng)] += 1.0 / n;
    for (std::size_t i = 0; i < freq.size(); ++i) {
        const double p = u.support()[i].prob;
        EXPECT_NEAR(freq[i], p, 5.0 * std::sqrt(p * (1 - p) / n) + 1e-12) << "atom " << i;
    }
}

TEST(UserDistribution, ZeroProbabilityAtomsNeverDrawn) {
    UserDistribution u({{"q", 1.0, {1.0, 0.0}}});
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) EXPECT_EQ(u.sample_index(rng), 2u);
}

TEST(BehaviorModel, ValidationReportsEachViolation) {
    Matrix m(2, 2);
    m << 0.5, 0.5, 1.2, -0.1;
    BehaviorModel model(2, {m});
    auto v = validate_model(model);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0].kind, ModelViolation::Kind::negative_entry);
    EXPECT_EQ(v[1].kind, ModelViolation::Kind::row_sum);
    EXPECT_EQ(v[1].row, 1u);
    EXPECT_THROW(require_valid(model), InputError);
    EXPECT_NO_THROW(require_valid(BehaviorModel::uniform(3, 2)));

    Matrix nan = Matrix::Constant(2, 2, 0.5);
    nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_EQ(validate_model(BehaviorModel(2, {nan})).front().kind, ModelViolation::Kind::non_finite);
}

TEST(BehaviorModel, ShapeChecks) {
    EXPECT_THROW(BehaviorModel(1, {Matrix::Ones(1, 1)}), InputError);
    EXPECT_THROW(BehaviorModel(2, {}), InputError);
    EXPECT_THROW(BehaviorModel(2, {Matrix::Ones(3, 3)}), InputError);
}

TEST(Mechanism, LexicographicOrderAndDistance) {
    Mechanism a{{0.0, 1.0}}, b{{0.0, 2.0}}, c{{1.0, 0.0}};
    EXPECT_LT(a, b);
    EXPECT_LT(b, c);
    EXPECT_DOUBLE_EQ(sup_distance(a, c), 1.0);
    EXPECT_DOUBLE_EQ(sup_distance(b, c), 2.0);
    EXPECT_THROW(sup_distance(a, Mechanism{{1.0}}), InputError);
}

TEST(MechanismSpace, ProductEnumeratesFirstCoordinateSlowest) {
    auto s = product_space({{0.0, 1.0}, {5.0, 6.0, 7.0}});
    ASSERT_EQ(s.size(), 6u);
    EXPECT_EQ(s.members[0].params, (std::vector<double>{0.0, 5.0}));
    EXPECT_EQ(s.members[1].params, (std::vector<double>{0.0, 6.0}));
    EXPECT_EQ(s.members[3].params, (std::vector<double>{1.0, 5.0}));
    EXPECT_DOUBLE_EQ(s.diameter(), 2.0);
    EXPECT_EQ(product_space({{1.0}, {}}).size(), 0u);
}
