#pragma once

// Incremental comparison of two vector quantities. The comparator learns the
// mean and variance of the distance ||X - Y|| (the shell) and flags a mismatch
// when a new distance leaves the band shelldist +/- k * sigma.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "hollow/shell_stats.hpp"

namespace hollow {

enum class AveragingMode { batch, ewma };

struct ComparatorConfig {
    AveragingMode mode = AveragingMode::batch;
    double alpha = 0.0;  // smoothing factor, ewma only
    double threshold_k = 4.0;
    bool update_on_match_only = false;
};

struct MatchResult {
    double distance = 0.0;
    bool decided = false;  // false while fewer than two distances have been seen
    bool match = true;
    // Shell the decision was taken against (state before this observation).
    double shelldist = 0.0;
    double shellvar = 0.0;
    double bound = 0.0;
};

class Comparator {
public:
    Comparator() = default;

    explicit Comparator(ComparatorConfig config) : config_(config) {
        if (!(config_.threshold_k > 0.0)) throw std::invalid_argument("threshold_k must be > 0");
        if (config_.mode == AveragingMode::ewma && !(config_.alpha > 0.0 && config_.alpha < 1.0)) {
            throw std::invalid_argument("alpha must lie in (0, 1)");
        }
    }

    static Comparator batch(double threshold_k = 4.0) {
        return Comparator({AveragingMode::batch, 0.0, threshold_k, false});
    }

    static Comparator ewma(double alpha, double threshold_k = 4.0) {
        return Comparator({AveragingMode::ewma, alpha, threshold_k, false});
    }

    MatchResult compare(std::span<const double> x, std::span<const double> y, double ex = 0.0,
                        double ey = 0.0) {
        return observe(euclidean_distance(x, y), ex, ey);
    }

    /// Feeds one distance. `ex`/`ey` are the estimation-error lengths of the
    /// two operands (0 for a raw realization).
    MatchResult observe(double d, double ex = 0.0, double ey = 0.0) {
        if (!(ex >= 0.0 && ey >= 0.0)) throw std::invalid_argument("estimate errors must be >= 0");
        MatchResult out;
        out.distance = d;
        out.shelldist = shell_.mu;
        out.shellvar = shell_.var;
        out.bound = config_.threshold_k * std::sqrt(shell_.var + ex * ex + ey * ey);

        if (count_ >= 2) {
            out.decided = true;
            out.match = !(std::abs(d - shell_.mu) > out.bound);
            match_ = out.match;
        }

        const bool update = !shell_.frozen && (count_ < 2 || out.match || !config_.update_on_match_only);
        if (update) {
            if (config_.mode == AveragingMode::batch) {
                update_batch(d);
            } else {
                update_ewma(d);
            }
        }
        ++count_;
        return out;
    }

    void freeze() {
        if (count_ < 2) throw std::logic_error("insufficient history");
        shell_.frozen = true;
    }

    const ShellEstimate& shell() const { return shell_; }
    double shelldist() const { return shell_.mu; }
    double shellvar() const { return shell_.var; }
    std::uint64_t count() const { return count_; }
    std::uint64_t updates() const { return updates_; }
    bool last_match() const { return match_; }
    bool frozen() const { return shell_.frozen; }
    double alpha_weight() const { return alpha_weight_; }
    const ComparatorConfig& config() const { return config_; }

    // Raw state access for persistence.
    struct State {
        ShellEstimate shell;
        std::uint64_t count = 0;
        std::uint64_t updates = 0;
        bool match = true;
        double alpha_weight = 0.0;
        double sum_mean = 0.0;
        double sum_var = 0.0;
    };

    State state() const { return {shell_, count_, updates_, match_, alpha_weight_, sum_mean_, sum_var_}; }

    static Comparator restore(ComparatorConfig config, const State& s) {
        Comparator c(config);
        c.shell_ = s.shell;
        c.count_ = s.count;
        c.updates_ = s.updates;
        c.match_ = s.match;
        c.alpha_weight_ = s.alpha_weight;
        c.sum_mean_ = s.sum_mean;
        c.sum_var_ = s.sum_var;
        return c;
    }

private:
    void update_batch(double d) {
        const auto m = static_cast<double>(updates_);
        if (updates_ >= 1) {
            shell_.var = ((d - shell_.mu) * (d - shell_.mu) + (m - 1.0) * shell_.var) / m;
        }
        shell_.mu = (d + m * shell_.mu) / (m + 1.0);
        ++updates_;
        shell_.weight = static_cast<double>(updates_);
    }

    // Accumulators are kept unnormalized; dividing by the accumulated weight
    // on read gives the bias-corrected weighted mean.
    void update_ewma(double d) {
        const double a = config_.alpha;
        alpha_weight_ = a + (1.0 - a) * alpha_weight_;
        if (updates_ >= 1) {
            sum_var_ = a * (d - shell_.mu) * (d - shell_.mu) + (1.0 - a) * sum_var_;
            shell_.var = sum_var_ / alpha_weight_;
        }
        sum_mean_ = a * d + (1.0 - a) * sum_mean_;
        shell_.mu = sum_mean_ / alpha_weight_;
        ++updates_;
        shell_.weight = alpha_weight_;
    }

    ComparatorConfig config_{};
    ShellEstimate shell_{};
    std::uint64_t count_ = 0;
    std::uint64_t updates_ = 0;  // observations folded into the shell
    bool match_ = true;
    double alpha_weight_ = 0.0;
    double sum_mean_ = 0.0;
    double sum_var_ = 0.0;
};

}  // namespace hollow
