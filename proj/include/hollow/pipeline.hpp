#pragma once

// End-to-end monitoring of a repeatable multichannel process.
//
// Each realization is normalized, folded into the manifold model and compared
// with the reference interpolated at its independent coordinates. Two
// comparisons run side by side:
//
//   fast  - distance from the last realization to the interpolated reference,
//           judged against the learned shell widened by the interpolation
//           uncertainty sigma_M;
//   trend - distance between the frozen initial reference and the smoothed
//           (exponentially weighted) residual response, judged against a shell
//           frozen at the end of warm-up.
//
// With no independent channel the manifold degenerates to a single point and
// the reference is the running centroid of all realizations.
//
// Warm-up timeline (M0 = config.warmup):
//   [1, M0/2]   ranges and manifold model only;
//   M0/2        dependent-channel scales are fixed for every later distance;
//   (M0/2, M0]  both comparators train, no alarms;
//   M0          initial reference and trend shell are frozen; alarms start.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hollow/clustering.hpp"
#include "hollow/comparator.hpp"
#include "hollow/kriging.hpp"
#include "hollow/shell_stats.hpp"

namespace hollow {

/// Running per-channel ranges; scale = max(range, 1e-12 * (|max| + 1)).
class Normalizer {
public:
    Normalizer() = default;
    explicit Normalizer(std::size_t dims) : min_(dims, 0.0), max_(dims, 0.0) {}

    void observe(std::span<const double> x) {
        if (x.size() != min_.size()) throw std::invalid_argument("dimension mismatch");
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(x[i])) throw std::invalid_argument("non-finite value in channel " + std::to_string(i));
            if (count_ == 0) {
                min_[i] = max_[i] = x[i];
            } else {
                min_[i] = std::min(min_[i], x[i]);
                max_[i] = std::max(max_[i], x[i]);
            }
        }
        ++count_;
    }

    double scale(std::size_t i) const {
        const double floor = 1e-12 * (std::abs(max_[i]) + 1.0);
        return std::max(max_[i] - min_[i], floor);
    }

    Vector scales() const {
        Vector out(min_.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale(i);
        return out;
    }

    /// Updates the ranges with x, then maps it to (x - min) / scale.
    Vector normalize(std::span<const double> x) {
        observe(x);
        Vector out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - min_[i]) / scale(i);
        return out;
    }

    std::size_t dims() const { return min_.size(); }
    std::uint64_t count() const { return count_; }
    const Vector& mins() const { return min_; }
    const Vector& maxs() const { return max_; }

    static Normalizer restore(Vector mins, Vector maxs, std::uint64_t count) {
        if (mins.size() != maxs.size()) throw std::invalid_argument("normalizer: range size mismatch");
        Normalizer n;
        n.min_ = std::move(mins);
        n.max_ = std::move(maxs);
        n.count_ = count;
        return n;
    }

private:
    Vector min_;
    Vector max_;
    std::uint64_t count_ = 0;
};

struct MonitorConfig {
    double threshold_k = 4.0;
    std::uint64_t warmup = 500;
    double alpha = 0.05;  // smoothing of the actualized response
    std::uint64_t refit_interval = 100;
    std::size_t kmax = 50;
    double cdist = 1.5;
    bool update_on_match_only = false;
    double ewma_maturity = 0.99;  // accumulated weight before the trend shell trains

    void validate() const {
        if (!(threshold_k > 0.0)) throw std::invalid_argument("threshold_k must be > 0");
        if (warmup < 4) throw std::invalid_argument("warmup must be >= 4");
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
        if (refit_interval < 1) throw std::invalid_argument("refit interval must be >= 1");
        if (kmax < 2) throw std::invalid_argument("kmax must be >= 2");
        if (!(cdist > 0.0)) throw std::invalid_argument("cdist must be > 0");
        if (!(ewma_maturity > 0.0 && ewma_maturity < 1.0)) throw std::invalid_argument("ewma maturity must lie in (0, 1)");
    }
};

enum class ComparisonType { fast, trend };
enum class Direction { above, below };

inline const char* to_string(ComparisonType t) { return t == ComparisonType::fast ? "fast" : "trend"; }
inline const char* to_string(Direction d) { return d == Direction::above ? "above" : "below"; }

struct AlarmEvent {
    std::uint64_t index = 0;
    ComparisonType type = ComparisonType::fast;
    double distance = 0.0;
    double shelldist = 0.0;
    double sigma_m = 0.0;
    double bound = 0.0;
    double z = 0.0;
    Direction direction = Direction::above;
};

/// Per-step trace of the fast comparison, for reporting.
struct FastTrace {
    bool evaluated = false;
    bool decided = false;
    double distance = 0.0;
    double shelldist = 0.0;
    double sigma_m = 0.0;
    double bound = 0.0;
};

struct StepResult {
    std::uint64_t index = 0;
    FastTrace fast;
    std::optional<AlarmEvent> fast_alarm;
    std::optional<AlarmEvent> trend_alarm;
    std::vector<std::string> diagnostics;
};

/// Frozen reference: either the kriged manifold or a single centroid.
struct Reference {
    std::optional<KrigingModel> kriging;
    Cluster point;  // used when there is no independent channel
};

class Monitor {
public:
    Monitor(std::vector<bool> independent, MonitorConfig config)
        : config_(config), roles_(std::move(independent)), normalizer_(roles_.size()) {
        config_.validate();
        for (std::size_t i = 0; i < roles_.size(); ++i) (roles_[i] ? indep_ : dep_).push_back(i);
        if (dep_.empty()) throw std::invalid_argument("no dependent channel");
        if (!indep_.empty()) clusters_.emplace(config_.kmax, config_.cdist, Mask(roles_));
        fast_ = Comparator({AveragingMode::batch, 0.0, config_.threshold_k, config_.update_on_match_only});
        trend_ = Comparator({AveragingMode::batch, 0.0, config_.threshold_k, false});
        ewma_sum_.assign(dep_.size(), 0.0);
    }

    /// Ingests one raw realization and runs the fast comparison; the trend
    /// comparison is evaluated as well once the reference is frozen.
    StepResult process(std::span<const double> x) {
        StepResult out = monitor_step(x);
        if (reference_frozen()) out.trend_alarm = trend_step();
        return out;
    }

    StepResult monitor_step(std::span<const double> x) {
        if (x.size() != roles_.size()) throw std::invalid_argument("dimension mismatch");
        StepResult out;
        out.index = ++index_;

        normalizer_.observe(x);
        const Vector live = normalizer_.scales();

        if (clusters_) {
            clusters_->ingest(x, live);
            ++since_fit_;
        } else if (point_.population == 0) {
            point_ = seed_cluster(x);
        } else {
            merge_realization(point_, x, 0.0);
        }

        if (index_ == settle_index()) {
            dep_scales_.resize(dep_.size());
            for (std::size_t n = 0; n < dep_.size(); ++n) dep_scales_[n] = live[dep_[n]];
        }

        if (clusters_ && clusters_->seeded() && (!kriging_ || since_fit_ >= config_.refit_interval)) {
            refit(live, out.diagnostics);
        }

        if (index_ <= settle_index() || !reference_ready()) return out;

        const Vector scales = dependent_scales();
        Vector estimate;
        double sigma_m = 0.0;
        if (!reference_at(kriging_, point_, x, scales, estimate, sigma_m, out.diagnostics)) return out;

        const Vector residual = scaled_residual(x, estimate, scales);
        const double d = norm(residual);
        const MatchResult r = fast_.observe(d, sigma_m, 0.0);
        out.fast = {true, r.decided, d, r.shelldist, sigma_m, r.bound};
        if (index_ > config_.warmup && r.decided && !r.match) {
            out.fast_alarm = make_alarm(ComparisonType::fast, d, r.shelldist, r.shellvar, sigma_m, r.bound);
        }

        update_actualized(x, residual, scales, out.diagnostics);
        if (!reference_frozen() && index_ >= config_.warmup && trend_.count() >= 2) freeze_reference();
        return out;
    }

    /// Compares the actualized average response with the frozen initial
    /// reference.
    std::optional<AlarmEvent> trend_step() {
        if (!reference_frozen()) throw std::logic_error("reference not frozen");
        const double d = actualized_distance();
        const double ex = new_realization_correction(initial_mu_, std::max(initial_count_, 2.0));
        const double ey = new_realization_correction(initial_mu_, std::max(effective_count(), 2.0));
        const MatchResult r = trend_.observe(d, ex, ey);
        if (r.decided && !r.match) {
            return make_alarm(ComparisonType::trend, d, r.shelldist, r.shellvar, std::sqrt(ex * ex + ey * ey), r.bound);
        }
        return std::nullopt;
    }

    bool reference_frozen() const { return initial_.has_value(); }

    bool reference_ready() const { return clusters_ ? kriging_.has_value() : point_.population >= 2; }

    /// Kish effective sample size of the exponential weights.
    double effective_count() const { return ewma_sq_weight_ > 0.0 ? ewma_weight_ * ewma_weight_ / ewma_sq_weight_ : 0.0; }

    double actualized_distance() const {
        if (!(ewma_weight_ > 0.0)) return 0.0;
        double acc = 0.0;
        for (double v : ewma_sum_) acc += (v / ewma_weight_) * (v / ewma_weight_);
        return std::sqrt(acc);
    }

    const MonitorConfig& config() const { return config_; }
    const std::vector<bool>& roles() const { return roles_; }
    const std::vector<std::size_t>& independent_channels() const { return indep_; }
    const std::vector<std::size_t>& dependent_channels() const { return dep_; }
    const Normalizer& normalizer() const { return normalizer_; }
    const std::optional<ClusterModel>& clusters() const { return clusters_; }
    const std::optional<KrigingModel>& kriging() const { return kriging_; }
    const Cluster& point_reference() const { return point_; }
    const Comparator& fast() const { return fast_; }
    const Comparator& trend() const { return trend_; }
    std::uint64_t index() const { return index_; }

    /// Complete mutable state, exposed for persistence.
    struct State {
        Normalizer normalizer;
        std::optional<ClusterModel::State> clusters;
        std::optional<KrigingModel::Parameters> kriging;
        std::uint64_t since_fit = 0;
        Cluster point;
        Comparator::State fast;
        Comparator::State trend;
        Vector ewma_sum;
        double ewma_weight = 0.0;
        double ewma_sq_weight = 0.0;
        Vector dep_scales;
        bool frozen = false;
        std::optional<KrigingModel::Parameters> initial_kriging;
        Cluster initial_point;
        double initial_mu = 0.0;
        double initial_count = 0.0;
        std::uint64_t index = 0;
    };

    State state() const {
        State s;
        s.normalizer = normalizer_;
        if (clusters_) s.clusters = clusters_->state();
        if (kriging_) s.kriging = kriging_->parameters();
        s.since_fit = since_fit_;
        s.point = point_;
        s.fast = fast_.state();
        s.trend = trend_.state();
        s.ewma_sum = ewma_sum_;
        s.ewma_weight = ewma_weight_;
        s.ewma_sq_weight = ewma_sq_weight_;
        s.dep_scales = dep_scales_;
        s.frozen = initial_.has_value();
        if (initial_) {
            if (initial_->kriging) s.initial_kriging = initial_->kriging->parameters();
            s.initial_point = initial_->point;
        }
        s.initial_mu = initial_mu_;
        s.initial_count = initial_count_;
        s.index = index_;
        return s;
    }

    static Monitor restore(std::vector<bool> independent, MonitorConfig config, State s) {
        Monitor m(std::move(independent), config);
        if (s.normalizer.dims() != m.roles_.size()) throw std::invalid_argument("model: normalizer dimension mismatch");
        if (s.ewma_sum.size() != m.dep_.size()) throw std::invalid_argument("model: actualized response size mismatch");
        if (!s.dep_scales.empty() && s.dep_scales.size() != m.dep_.size()) {
            throw std::invalid_argument("model: dependent scale size mismatch");
        }
        if (m.clusters_.has_value() != s.clusters.has_value()) throw std::invalid_argument("model: cluster state mismatch");
        m.normalizer_ = std::move(s.normalizer);
        if (s.clusters) m.clusters_ = ClusterModel::restore(config.kmax, config.cdist, Mask(m.roles_), std::move(*s.clusters));
        if (s.kriging) m.kriging_ = KrigingModel::restore(std::move(*s.kriging));
        m.since_fit_ = s.since_fit;
        m.point_ = std::move(s.point);
        m.fast_ = Comparator::restore(m.fast_.config(), s.fast);
        m.trend_ = Comparator::restore(m.trend_.config(), s.trend);
        m.ewma_sum_ = std::move(s.ewma_sum);
        m.ewma_weight_ = s.ewma_weight;
        m.ewma_sq_weight_ = s.ewma_sq_weight;
        m.dep_scales_ = std::move(s.dep_scales);
        if (s.frozen) {
            Reference ref;
            if (s.initial_kriging) ref.kriging = KrigingModel::restore(std::move(*s.initial_kriging));
            ref.point = std::move(s.initial_point);
            m.initial_ = std::move(ref);
        }
        m.initial_mu_ = s.initial_mu;
        m.initial_count_ = s.initial_count;
        m.index_ = s.index;
        return m;
    }

private:
    std::uint64_t settle_index() const { return config_.warmup / 2; }

    Vector scales_for_fit(const Vector& live) const {
        Vector s = live;
        if (!dep_scales_.empty()) {
            for (std::size_t n = 0; n < dep_.size(); ++n) s[dep_[n]] = dep_scales_[n];
        }
        return s;
    }

    // Fixed scales once settled, live ones before.
    Vector dependent_scales() const {
        if (!dep_scales_.empty()) return dep_scales_;
        Vector out(dep_.size());
        for (std::size_t n = 0; n < dep_.size(); ++n) out[n] = normalizer_.scale(dep_[n]);
        return out;
    }

    void refit(const Vector& live, std::vector<std::string>& diagnostics) {
        try {
            const Vector scales = scales_for_fit(live);
            kriging_ = KrigingModel::fit(clusters_->clusters(), clusters_->mask(), scales);
        } catch (const std::exception& e) {
            diagnostics.push_back(std::string("kriging refit failed: ") + e.what());
        }
        since_fit_ = 0;
    }

    bool reference_at(const std::optional<KrigingModel>& kriging, const Cluster& point, std::span<const double> x,
                      const Vector& scales, Vector& estimate, double& sigma_m,
                      std::vector<std::string>& diagnostics) const {
        if (kriging) {
            Vector w;
            for (std::size_t i : indep_) w.push_back(x[i]);
            try {
                InterpolationResult r = kriging->interpolate(w);
                estimate = std::move(r.estimate);
                sigma_m = r.sigma_m;
                return true;
            } catch (const std::exception& e) {
                diagnostics.push_back(std::string("interpolation failed, training only: ") + e.what());
                return false;
            }
        }
        estimate.resize(dep_.size());
        double var = 0.0;
        for (std::size_t n = 0; n < dep_.size(); ++n) {
            estimate[n] = point.centroid[dep_[n]];
            var += point.per_dim_var[dep_[n]] / (scales[n] * scales[n]);
        }
        sigma_m = std::sqrt(var / static_cast<double>(point.population));
        return true;
    }

    Vector scaled_residual(std::span<const double> x, const Vector& estimate, const Vector& scales) const {
        Vector r(dep_.size());
        for (std::size_t n = 0; n < dep_.size(); ++n) r[n] = (x[dep_[n]] - estimate[n]) / scales[n];
        return r;
    }

    static double norm(const Vector& v) {
        double acc = 0.0;
        for (double e : v) acc += e * e;
        return std::sqrt(acc);
    }

    // Residuals are taken against the evolving reference during warm-up and
    // against the frozen initial reference afterwards.
    void update_actualized(std::span<const double> x, const Vector& residual, const Vector& scales,
                           std::vector<std::string>& diagnostics) {
        Vector r = residual;
        if (initial_) {
            Vector estimate;
            double sigma_m = 0.0;
            if (!reference_at(initial_->kriging, initial_->point, x, scales, estimate, sigma_m, diagnostics)) return;
            r = scaled_residual(x, estimate, scales);
        }
        const double a = config_.alpha;
        for (std::size_t n = 0; n < r.size(); ++n) ewma_sum_[n] = a * r[n] + (1.0 - a) * ewma_sum_[n];
        ewma_weight_ = a + (1.0 - a) * ewma_weight_;
        ewma_sq_weight_ = a * a + (1.0 - a) * (1.0 - a) * ewma_sq_weight_;
        if (!initial_ && ewma_weight_ >= config_.ewma_maturity) trend_.observe(actualized_distance());
    }

    void freeze_reference() {
        initial_ = Reference{kriging_, point_};
        initial_mu_ = fast_.shelldist();
        initial_count_ = clusters_ ? static_cast<double>(clusters_->kcount()) : static_cast<double>(point_.population);
        trend_.freeze();
    }

    AlarmEvent make_alarm(ComparisonType type, double d, double shelldist, double shellvar, double sigma_m,
                          double bound) const {
        AlarmEvent e;
        e.index = index_;
        e.type = type;
        e.distance = d;
        e.shelldist = shelldist;
        e.sigma_m = sigma_m;
        e.bound = bound;
        const double spread = std::sqrt(shellvar + sigma_m * sigma_m);
        e.z = spread > 0.0 ? (d - shelldist) / spread : 0.0;
        e.direction = d >= shelldist ? Direction::above : Direction::below;
        return e;
    }

    MonitorConfig config_;
    std::vector<bool> roles_;
    std::vector<std::size_t> indep_;
    std::vector<std::size_t> dep_;
    Normalizer normalizer_;
    std::optional<ClusterModel> clusters_;
    std::optional<KrigingModel> kriging_;
    std::uint64_t since_fit_ = 0;
    Cluster point_;
    Comparator fast_;
    Comparator trend_;
    Vector ewma_sum_;
    double ewma_weight_ = 0.0;
    double ewma_sq_weight_ = 0.0;
    Vector dep_scales_;
    std::optional<Reference> initial_;
    double initial_mu_ = 0.0;
    double initial_count_ = 0.0;
    std::uint64_t index_ = 0;
};

}  // namespace hollow
