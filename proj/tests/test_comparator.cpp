#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hollow/comparator.hpp"
#include "oracles.hpp"

using hollow::Comparator;

namespace {

hollow::MatchResult feed(Comparator& c, double d, double ex = 0.0, double ey = 0.0) {
    const std::vector<double> x{d};
    const std::vector<double> zero{0.0};
    return c.compare(x, zero, ex, ey);
}

}  // namespace

TEST(Comparator, StartsEmpty) {
    for (auto c : {Comparator::batch(4.0), Comparator::ewma(0.5, 4.0)}) {
        EXPECT_EQ(c.count(), 0u);
        EXPECT_EQ(c.shelldist(), 0.0);
        EXPECT_EQ(c.shellvar(), 0.0);
        EXPECT_TRUE(c.last_match());
        EXPECT_EQ(c.alpha_weight(), 0.0);
    }
    EXPECT_THROW(Comparator::ewma(1.5), std::invalid_argument);
    EXPECT_THROW(Comparator::ewma(0.0), std::invalid_argument);
    EXPECT_THROW(Comparator::batch(0.0), std::invalid_argument);
}

TEST(Comparator, HandTrace) {
    auto c = Comparator::batch(4.0);
    EXPECT_FALSE(feed(c, 10.0).decided);
    EXPECT_FALSE(feed(c, 10.5).decided);
    EXPECT_NEAR(c.shelldist(), 10.25, 1e-12);
    EXPECT_NEAR(c.shellvar(), 0.25, 1e-12);
    EXPECT_EQ(c.count(), 2u);

    const auto third = feed(c, 10.0);
    EXPECT_TRUE(third.decided);
    EXPECT_TRUE(third.match);
    EXPECT_NEAR(third.bound, 2.0, 1e-12);
    EXPECT_NEAR(c.shellvar(), 0.15625, 1e-10);
    EXPECT_NEAR(c.shelldist(), 10.0 + 1.0 / 6.0, 1e-10);

    const auto fourth = feed(c, 30.0);
    EXPECT_FALSE(fourth.match);
    EXPECT_NEAR(fourth.bound, 4.0 * std::sqrt(0.15625), 1e-12);
}

TEST(Comparator, FreezeHoldsShellButStillDecides) {
    auto c = Comparator::batch(4.0);
    EXPECT_THROW(c.freeze(), std::logic_error);
    for (double d : {10.0, 10.5, 10.0}) feed(c, d);
    c.freeze();
    const auto before = c.shell();
    const auto r = feed(c, 10.2);
    EXPECT_TRUE(r.decided);
    EXPECT_TRUE(r.match);
    EXPECT_NEAR(r.shelldist, 10.0 + 1.0 / 6.0, 1e-10);
    EXPECT_FALSE(feed(c, 30.0).match);
    oracle::Normals rng(1);
    for (int i = 0; i < 100; ++i) feed(c, 10.0 + rng());
    EXPECT_EQ(c.shell(), before);
    EXPECT_EQ(c.count(), 105u);
}

TEST(Comparator, BatchMatchesStepReplay) {
    oracle::Normals rng(5);
    std::vector<double> d;
    for (int i = 0; i < 2000; ++i) d.push_back(std::fabs(20.0 + 3.0 * rng()));
    d[700] = 80.0;
    const auto ref = oracle::replay_batch(d, 4.0);
    auto c = Comparator::batch(4.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto r = c.observe(d[i]);
        sum += d[i];
        ASSERT_EQ(r.decided, ref[i].decided);
        ASSERT_EQ(r.match, ref[i].match) << i;
        ASSERT_NEAR(c.shelldist(), ref[i].shelldist, 1e-10 * ref[i].shelldist);
        ASSERT_NEAR(c.shellvar(), ref[i].shellvar, 1e-10 * std::max(ref[i].shellvar, 1e-300));
        ASSERT_NEAR(c.shelldist(), sum / static_cast<double>(i + 1), 1e-10 * c.shelldist());
    }
    EXPECT_FALSE(ref[700].match);
}

TEST(Comparator, EwmaWeightedMean) {
    auto c = Comparator::ewma(0.5);
    c.observe(10.0);
    EXPECT_DOUBLE_EQ(c.alpha_weight(), 0.5);
    EXPECT_DOUBLE_EQ(c.shelldist(), 10.0);
    c.observe(12.0);
    EXPECT_DOUBLE_EQ(c.alpha_weight(), 0.75);
    EXPECT_NEAR(c.shelldist(), (0.5 * 12.0 + 0.25 * 10.0) / 0.75, 1e-12);
    EXPECT_NEAR(c.shelldist(), 11.3333, 1e-4);
}

TEST(Comparator, EwmaWeightRecurrenceAndFixedPoint) {
    auto c = Comparator::ewma(0.3);
    double prev = 0.0;
    for (int i = 0; i < 50; ++i) {
        c.observe(7.25);
        EXPECT_DOUBLE_EQ(c.shelldist(), 7.25);
        EXPECT_NEAR(c.alpha_weight(), 0.3 + 0.7 * prev, 1e-15);
        EXPECT_GT(c.alpha_weight(), prev);
        EXPECT_LT(c.alpha_weight(), 1.0);
        prev = c.alpha_weight();
    }
}

TEST(Comparator, SmallAlphaTracksBatchMean) {
    oracle::Normals rng(9);
    auto batch = Comparator::batch();
    auto ewma = Comparator::ewma(0.001);
    for (int i = 0; i < 20000; ++i) {
        const double d = 5.0 + rng();
        batch.observe(d);
        ewma.observe(d);
    }
    EXPECT_NEAR(ewma.shelldist(), batch.shelldist(), 0.1);
    EXPECT_NEAR(ewma.shellvar(), batch.shellvar(), 0.15);
}

TEST(Comparator, EstimateErrorsWidenTheBound) {
    auto a = Comparator::batch();
    auto b = Comparator::batch();
    for (double d : {10.0, 10.5, 10.0}) {
        feed(a, d);
        feed(b, d);
    }
    const auto base = feed(a, 12.0);
    EXPECT_FALSE(base.match);
    EXPECT_NEAR(base.bound, 4.0 * std::sqrt(base.shellvar), 1e-12);
    const auto wide = feed(b, 12.0, 0.3, 0.4);
    EXPECT_NEAR(wide.bound, 4.0 * std::sqrt(wide.shellvar + 0.25), 1e-12);
    EXPECT_TRUE(wide.match);
}

TEST(Comparator, ZeroErrorsReduceToBaseRule) {
    oracle::Normals rng(2);
    auto a = Comparator::batch();
    auto b = Comparator::batch();
    for (int i = 0; i < 500; ++i) {
        const double d = 3.0 + rng();
        const auto ra = a.observe(d);
        const auto rb = b.observe(d, 0.0, 0.0);
        ASSERT_EQ(ra.match, rb.match);
        ASSERT_EQ(ra.bound, rb.bound);
    }
}

TEST(Comparator, ScaleCovariantDecisions) {
    oracle::Normals rng(3);
    for (double scale : {0.01, 3.0, 1e4}) {
        auto a = Comparator::batch();
        auto b = Comparator::batch();
        for (int i = 0; i < 400; ++i) {
            std::vector<double> x{rng(), rng(), rng()};
            std::vector<double> y{rng(), rng(), rng()};
            if (i % 37 == 0) x[0] += 10.0;
            const double ex = 0.1 * std::fabs(rng());
            const double ey = 0.1 * std::fabs(rng());
            const auto ra = a.compare(x, y, ex, ey);
            for (auto& v : x) v *= scale;
            for (auto& v : y) v *= scale;
            const auto rb = b.compare(x, y, ex * scale, ey * scale);
            ASSERT_EQ(ra.match, rb.match) << scale << " " << i;
        }
    }
}

TEST(Comparator, GaussianMismatchRate) {
    oracle::Normals rng(17);
    auto c = Comparator::batch();
    int mismatches = 0;
    const int total = 200000;
    for (int i = 0; i < total; ++i) {
        const auto r = c.observe(50.0 + 2.0 * rng());
        if (i >= 1000 && r.decided && !r.match) ++mismatches;
    }
    EXPECT_LE(static_cast<double>(mismatches) / (total - 1000), 5e-4);
}

TEST(Comparator, ZeroDistanceIsAnObservation) {
    auto c = Comparator::batch();
    c.observe(0.0);
    c.observe(0.0);
    EXPECT_EQ(c.count(), 2u);
    EXPECT_EQ(c.shelldist(), 0.0);
    EXPECT_TRUE(c.observe(0.0).match);
}

TEST(Comparator, UpdateOnMatchOnlySkipsOutliers) {
    Comparator c({hollow::AveragingMode::batch, 0.0, 4.0, true});
    for (double d : {10.0, 10.5, 10.0}) c.observe(d);
    const auto before = c.shell();
    EXPECT_FALSE(c.observe(30.0).match);
    EXPECT_EQ(c.shell(), before);
    EXPECT_EQ(c.count(), 4u);
    EXPECT_EQ(c.updates(), 3u);
    EXPECT_TRUE(c.observe(10.1).match);
    EXPECT_EQ(c.updates(), 4u);
}

TEST(Comparator, DimensionMismatch) {
    auto c = Comparator::batch();
    EXPECT_THROW(c.compare(std::vector<double>{1, 2}, std::vector<double>{1}), std::invalid_argument);
}

TEST(Comparator, StateRestoreContinuesIdentically) {
    oracle::Normals rng(4);
    auto a = Comparator::ewma(0.1);
    for (int i = 0; i < 100; ++i) a.observe(5.0 + rng());
    auto b = Comparator::restore(a.config(), a.state());
    for (int i = 0; i < 100; ++i) {
        const double d = 5.0 + rng();
        const auto ra = a.observe(d);
        const auto rb = b.observe(d);
        ASSERT_EQ(ra.match, rb.match);
    }
    EXPECT_EQ(a.shell(), b.shell());
}
