#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gtml/core.hpp"

namespace gtml {

/// n(h, b, b') transition counts over t = 1..T-1 of a trajectory.
class TransitionCounts {
public:
    TransitionCounts(std::size_t num_behaviors, std::size_t num_signals);

    static TransitionCounts from(const Trajectory& traj, std::size_t num_behaviors,
                                 std::size_t num_signals);

    void add(SignalId h, BehaviorId from, BehaviorId to);

    std::uint64_t count(SignalId h, BehaviorId from, BehaviorId to) const {
        return counts_[(h * nb_ + from) * nb_ + to];
    }
    std::uint64_t row_total(SignalId h, BehaviorId from) const { return totals_[h * nb_ + from]; }
    std::uint64_t total() const noexcept { return total_; }
    std::size_t num_behaviors() const noexcept { return nb_; }
    std::size_t num_signals() const noexcept { return nh_; }

private:
    std::size_t nb_;
    std::size_t nh_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> totals_;
    std::uint64_t total_ = 0;
};

enum class FallbackPolicy { uniform };

struct FitReport {
    std::vector<double> log_likelihood;  // mean log-likelihood after each accepted step
    std::size_t iterations = 0;
    double gradient_norm = 0.0;          // projected-gradient infinity norm at the end
    bool converged = true;
    std::string diagnostic;
    std::vector<std::pair<SignalId, BehaviorId>> fallback_cells;  // zero-count rows
    bool renormalized = false;
};

/// Conditional-frequency estimator M_h(b, b') = n(h, b, b') / n(h, b). Rows
/// with n(h, b) = 0 get the fallback row and are listed in the report.
/// Throws InputError for trajectories shorter than 2.
std::pair<BehaviorModel, FitReport> fit_nonparametric(const Trajectory& traj,
                                                      std::size_t num_behaviors,
                                                      std::size_t num_signals,
                                                      FallbackPolicy fallback = FallbackPolicy::uniform);

/// Which blocks of (emb(b), emb(h), 1) enter the regressor.
struct ParametricFeatures {
    bool behavior = true;
    bool signal = true;
    bool bias = true;
};

/// M_h(b, b') proportional to exp(-(y(b') - <w, x(b, h)>)^2), normalized over
/// the finite behavior space. y is the scalar behavior embedding and x stacks
/// the selected feature blocks.
class ParametricFamily {
public:
    ParametricFamily(const BehaviorSpace& behaviors, const SignalSpace& signals,
                     ParametricFeatures features = {});

    std::size_t dim() const noexcept { return dim_; }
    std::size_t num_behaviors() const noexcept { return targets_.size(); }
    std::size_t num_signals() const noexcept { return num_signals_; }
    const ParametricFeatures& features() const noexcept { return features_; }

    double target(BehaviorId b) const { return targets_.at(b); }
    /// Regressor x(b, h), length dim().
    std::span<const double> regressor(BehaviorId b, SignalId h) const {
        return {regressors_.data() + (h * targets_.size() + b) * dim_, dim_};
    }

    /// Row of M_h(b, .) at location mu = <w, x(b, h)>.
    void row(double mu, std::span<double> out) const;

    BehaviorModel materialize(std::span<const double> w) const;

    /// Mean log-likelihood of the counts at w; fills `grad` (length dim()) when non-null.
    double log_likelihood(const TransitionCounts& counts, std::span<const double> w,
                          std::vector<double>* grad = nullptr) const;

private:
    ParametricFeatures features_;
    std::size_t dim_ = 0;
    std::size_t num_signals_ = 0;
    std::vector<double> targets_;
    std::vector<double> regressors_;
};

struct ParametricBehaviorModel {
    ParametricFamily family;
    std::vector<double> w;
    double bound = 0.0;  // W, with ||w||_inf <= W
};

BehaviorModel materialize(const ParametricBehaviorModel& pm);

struct MleOptions {
    double bound = 2.0;            // W
    std::size_t restarts = 10;
    double tolerance = 1e-8;       // on the projected gradient
    std::size_t max_iters = 20000;
    std::uint64_t seed = 0;
};

/// Box-constrained MLE by projected gradient ascent with backtracking from
/// `restarts` uniform starting points in [-W, W]^d. Non-convergence is
/// reported in the FitReport; the best iterate is returned regardless.
std::pair<ParametricBehaviorModel, FitReport> fit_parametric(const Trajectory& traj,
                                                             const ParametricFamily& family,
                                                             const MleOptions& options);

/// Same optimizer on precomputed counts.
std::pair<ParametricBehaviorModel, FitReport> fit_parametric(const TransitionCounts& counts,
                                                             const ParametricFamily& family,
                                                             const MleOptions& options);

}  // namespace gtml
