#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hollow/pipeline.hpp"
#include "hollow/synth.hpp"

using hollow::Monitor;
using hollow::MonitorConfig;
using hollow::Vector;
namespace synth = hollow::synth;

namespace {

std::vector<Vector> point_stream(std::size_t dims, std::size_t count, std::uint64_t seed, double eps0 = 1.0) {
    synth::ManifoldSpec spec;
    spec.dims = dims;
    spec.eps0 = eps0;
    spec.origin = 5.0;
    spec.seed = seed;
    return synth::gen_cloud(spec, count).realizations;
}

// Rows of [w, y_1..y_N] on a closed curve, with w the independent channel.
std::vector<Vector> curve_stream(std::size_t dims, std::size_t count, std::uint64_t seed, double eps0 = 0.1) {
    synth::ManifoldSpec spec;
    spec.kind = synth::ManifoldKind::curve;
    spec.dims = dims;
    spec.eps0 = eps0;
    spec.amplitude = 1.0;
    spec.seed = seed;
    const auto cloud = synth::gen_cloud(spec, count);
    std::vector<Vector> rows;
    for (std::size_t m = 0; m < count; ++m) {
        Vector row{cloud.latent[m][0]};
        row.insert(row.end(), cloud.realizations[m].begin(), cloud.realizations[m].end());
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<bool> curve_roles(std::size_t dims) {
    std::vector<bool> roles(dims + 1, false);
    roles[0] = true;
    return roles;
}

MonitorConfig small_config() {
    MonitorConfig c;
    c.warmup = 200;
    c.kmax = 12;
    c.refit_interval = 50;
    return c;
}

}  // namespace

TEST(Normalizer, Examples) {
    hollow::Normalizer n(1);
    EXPECT_EQ(n.normalize(Vector{2.0})[0], 0.0);
    n.normalize(Vector{4.0});
    n.normalize(Vector{10.0});
    EXPECT_DOUBLE_EQ(n.normalize(Vector{6.0})[0], 0.5);

    hollow::Normalizer c(2);
    for (int i = 0; i < 5; ++i) {
        const auto v = c.normalize(Vector{3.0, 1e6});
        EXPECT_EQ(v[0], 0.0);
        EXPECT_EQ(v[1], 0.0);
    }
    EXPECT_GT(c.scale(0), 0.0);
    EXPECT_DOUBLE_EQ(c.scale(1), 1e-12 * (1e6 + 1.0));
}

TEST(Normalizer, ScalesNeverShrink) {
    hollow::Normalizer n(3);
    const auto rows = point_stream(3, 500, 4);
    Vector prev(3, 0.0);
    for (const auto& r : rows) {
        n.observe(r);
        for (std::size_t i = 0; i < 3; ++i) {
            EXPECT_GE(n.scale(i), prev[i]);
            EXPECT_LE(n.mins()[i], n.maxs()[i]);
            prev[i] = n.scale(i);
        }
    }
    EXPECT_THROW(n.observe(Vector{1.0, NAN, 2.0}), std::invalid_argument);
    EXPECT_THROW(n.observe(Vector{1.0}), std::invalid_argument);
}

TEST(MonitorConfig, Validation) {
    MonitorConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.threshold_k, 4.0);
    c.alpha = 1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = MonitorConfig{};
    c.warmup = 2;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = MonitorConfig{};
    c.threshold_k = -1.0;
    EXPECT_THROW(Monitor({false}, c), std::invalid_argument);
    EXPECT_THROW(Monitor({true, true}, MonitorConfig{}), std::invalid_argument);
}

TEST(FastBound, ShellWidenedByInterpolationUncertainty) {
    hollow::Comparator::State s;
    s.shell = {10.0, 0.25, 100.0, false};
    s.count = 100;
    s.updates = 100;
    auto c = hollow::Comparator::restore({hollow::AveragingMode::batch, 0.0, 4.0, false}, s);
    auto same = c;
    const auto r = c.observe(13.5, 0.5, 0.0);
    EXPECT_FALSE(r.match);
    EXPECT_NEAR(r.bound, 4.0 * std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(r.bound, 2.828, 1e-3);
    const auto q = same.observe(10.0, 0.5, 0.0);
    EXPECT_TRUE(q.match);
}

TEST(Monitor, TrendBeforeWarmupThrows) {
    Monitor m(std::vector<bool>(4, false), small_config());
    EXPECT_THROW(m.trend_step(), std::logic_error);
    for (const auto& r : point_stream(4, 50, 1)) m.process(r);
    EXPECT_FALSE(m.reference_frozen());
    try {
        m.trend_step();
        FAIL();
    } catch (const std::logic_error& e) {
        EXPECT_STREQ(e.what(), "reference not frozen");
    }
}

TEST(Monitor, WarmupTimeline) {
    const auto cfg = small_config();
    Monitor m(std::vector<bool>(20, false), cfg);
    const auto rows = point_stream(20, 400, 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = m.process(rows[i]);
        const auto index = i + 1;
        EXPECT_EQ(r.index, index);
        EXPECT_EQ(r.fast.evaluated, index > cfg.warmup / 2) << index;
        if (index <= cfg.warmup) {
            EXPECT_FALSE(r.fast_alarm.has_value());
            EXPECT_FALSE(r.trend_alarm.has_value());
        }
        EXPECT_EQ(m.reference_frozen(), index >= cfg.warmup);
    }
    EXPECT_EQ(m.fast().count(), 400u - cfg.warmup / 2);
}

TEST(Monitor, BoundCompositionOnEveryStep) {
    Monitor m(curve_roles(30), small_config());
    int decided = 0;
    for (const auto& row : curve_stream(30, 800, 3)) {
        const auto r = m.process(row);
        if (!r.fast.decided || r.index <= 200) continue;
        ++decided;
        const bool outside = std::fabs(r.fast.distance - r.fast.shelldist) > r.fast.bound;
        EXPECT_EQ(outside, r.fast_alarm.has_value());
        if (r.fast_alarm) {
            const auto& a = *r.fast_alarm;
            EXPECT_EQ(a.bound, r.fast.bound);
            EXPECT_EQ(a.sigma_m, r.fast.sigma_m);
            EXPECT_NEAR(a.bound, 4.0 * (a.distance - a.shelldist) / a.z, 1e-9 * a.bound);
        }
    }
    EXPECT_EQ(decided, 600);
}

TEST(Monitor, StationaryPointProcessRarelyAlarms) {
    Monitor m(std::vector<bool>(200, false), small_config());
    int alarms = 0;
    for (const auto& row : point_stream(200, 20000, 6)) {
        const auto r = m.process(row);
        alarms += r.fast_alarm ? 1 : 0;
    }
    EXPECT_LE(alarms, 10);
}

TEST(Monitor, StationaryCurveRarelyAlarms) {
    Monitor m(curve_roles(40), small_config());
    int alarms = 0;
    int trend = 0;
    for (const auto& row : curve_stream(40, 6000, 7)) {
        const auto r = m.process(row);
        alarms += r.fast_alarm ? 1 : 0;
        trend += r.trend_alarm ? 1 : 0;
        EXPECT_TRUE(r.diagnostics.empty());
    }
    EXPECT_LE(alarms, 6);
    EXPECT_LE(trend, 6);
    ASSERT_TRUE(m.kriging().has_value());
}

// The fast shell keeps learning after warm-up, so a persistent step is caught
// at onset and then gradually absorbed; the check looks at the onset window.
TEST(Monitor, StepDefectOnCurveIsDetectedAbove) {
    auto rows = curve_stream(40, 1100, 8);
    std::vector<std::size_t> dep;
    for (std::size_t i = 1; i <= 40; ++i) dep.push_back(i);
    synth::inject_defect(rows, dep, 0.3, 1000);
    auto cfg = small_config();
    cfg.kmax = 24;
    Monitor m(curve_roles(40), cfg);
    int before = 0;
    int onset = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = m.process(rows[i]);
        if (!r.fast_alarm) continue;
        if (i < 1000) ++before;
        if (i >= 1000 && i < 1020) {
            ++onset;
            EXPECT_EQ(r.fast_alarm->direction, hollow::Direction::above);
        }
    }
    EXPECT_LE(before, 2);
    EXPECT_GE(onset, 16);
}

TEST(Monitor, DetectionImprovesWithOffset) {
    std::vector<int> hits;
    for (double offset : {0.25, 0.5, 1.0}) {
        int count = 0;
        for (std::uint64_t trial = 0; trial < 20; ++trial) {
            auto rows = point_stream(1000, 301, 1000 + trial);
            std::vector<std::size_t> all(1000);
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
            synth::inject_defect(rows, all, offset, 300);
            Monitor m(std::vector<bool>(1000, false), small_config());
            hollow::StepResult last;
            for (const auto& row : rows) last = m.process(row);
            count += last.fast_alarm ? 1 : 0;
        }
        hits.push_back(count);
    }
    EXPECT_LE(hits[0], hits[1]);
    EXPECT_LE(hits[1], hits[2]);
    EXPECT_EQ(hits[2], 20);
}

TEST(Monitor, DefectPushesDistanceUp) {
    auto rows = point_stream(50, 900, 9);
    std::vector<std::size_t> some{0, 5, 9, 12, 20, 21, 30, 33, 41, 49};
    synth::inject_defect(rows, some, 1.0, 600);
    Monitor m(std::vector<bool>(50, false), small_config());
    double before = 0.0, after = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = m.process(rows[i]);
        if (i >= 300 && i < 600) before += r.fast.distance;
        if (i >= 600) after += r.fast.distance;
    }
    EXPECT_GT(after / 300.0, before / 300.0);
}

TEST(Monitor, SlowDriftTripsTrendBeforeFast) {
    MonitorConfig cfg;
    cfg.warmup = 500;
    auto rows = point_stream(1000, 3000, 10);
    for (std::size_t m = 500; m < rows.size(); ++m) {
        const double drift = 0.05 * static_cast<double>(m - 500) / 100.0;
        for (auto& v : rows[m]) v += drift;
    }
    Monitor mon(std::vector<bool>(1000, false), cfg);
    std::int64_t first_fast = -1, first_trend = -1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = mon.process(rows[i]);
        if (r.fast_alarm && first_fast < 0) first_fast = static_cast<std::int64_t>(i);
        if (r.trend_alarm && first_trend < 0) first_trend = static_cast<std::int64_t>(i);
    }
    ASSERT_GE(first_trend, 0);
    EXPECT_TRUE(first_fast < 0 || first_trend < first_fast) << first_trend << " vs " << first_fast;
}

TEST(Monitor, UnchangedProcessKeepsTrendQuiet) {
    Monitor m(std::vector<bool>(100, false), small_config());
    int trend = 0;
    for (const auto& row : point_stream(100, 5000, 11)) trend += m.process(row).trend_alarm ? 1 : 0;
    EXPECT_LE(trend, 3);
}

TEST(Monitor, InitialReferenceImmutableAfterWarmup) {
    Monitor m(curve_roles(10), small_config());
    const auto rows = curve_stream(10, 1000, 12);
    for (std::size_t i = 0; i < 200; ++i) m.process(rows[i]);
    ASSERT_TRUE(m.reference_frozen());
    const auto frozen = m.state();
    for (std::size_t i = 200; i < rows.size(); ++i) m.process(rows[i]);
    const auto later = m.state();
    ASSERT_TRUE(later.initial_kriging.has_value());
    EXPECT_EQ(*later.initial_kriging, *frozen.initial_kriging);
    EXPECT_EQ(later.initial_mu, frozen.initial_mu);
    EXPECT_EQ(later.trend.shell, frozen.trend.shell);
}

TEST(Monitor, RestoreContinuesIdentically) {
    const auto rows = curve_stream(15, 1500, 13);
    Monitor a(curve_roles(15), small_config());
    for (std::size_t i = 0; i < 700; ++i) a.process(rows[i]);
    auto b = Monitor::restore(a.roles(), a.config(), a.state());
    for (std::size_t i = 700; i < rows.size(); ++i) {
        const auto ra = a.process(rows[i]);
        const auto rb = b.process(rows[i]);
        ASSERT_EQ(ra.fast.distance, rb.fast.distance);
        ASSERT_EQ(ra.fast_alarm.has_value(), rb.fast_alarm.has_value());
        ASSERT_EQ(ra.trend_alarm.has_value(), rb.trend_alarm.has_value());
    }
}

TEST(Monitor, DimensionMismatch) {
    Monitor m(std::vector<bool>(3, false), small_config());
    EXPECT_THROW(m.process(Vector{1.0}), std::invalid_argument);
}
