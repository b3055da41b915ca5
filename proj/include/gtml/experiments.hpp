#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gtml/behavior_learning.hpp"
#include "gtml/bounds.hpp"
#include "gtml/config.hpp"
#include "gtml/sponsored_search.hpp"

namespace gtml {

/// Objects derived from a config: the auction environment, its mechanism
/// space, and the true behavior model M*.
class Lab {
public:
    /// Throws ConfigError when the config is inconsistent with the auction
    /// (bad data mechanism, embeddings, weights, labels).
    explicit Lab(Config config);

    const Config& config() const noexcept { return config_; }
    const gsp::Auction& auction() const noexcept { return auction_; }
    const Environment& env() const noexcept { return auction_.environment(); }
    const MechanismSpace& space() const noexcept { return space_; }
    const BehaviorModel& true_model() const noexcept { return true_model_; }
    /// w* when the true model comes from the parametric family.
    const std::optional<std::vector<double>>& true_weights() const noexcept { return true_weights_; }
    ParametricFamily family() const;
    double loss_bound() const noexcept { return auction_.loss_bound(); }
    std::size_t num_behaviors() const noexcept { return env().behaviors.size(); }
    std::size_t num_signals() const noexcept { return env().signals.size(); }

    /// Certificate of the data-collection chain under M*.
    const ErgodicityCertificate& certificate() const;

    /// Cells (h, b) the data-collection mechanism visits under M*.
    const CellMask& identifiable_cells() const noexcept { return identifiable_; }

    /// Trajectory under the data mechanism with the configured initialization.
    Trajectory simulate(std::size_t length, std::uint64_t seed) const;

    struct Fit {
        BehaviorModel model;
        FitReport report;
        std::optional<std::vector<double>> weights;
    };
    /// Configured estimator; `seed` drives the parametric restarts.
    Fit fit(const Trajectory& traj, std::uint64_t seed) const;

private:
    Config config_;
    gsp::Auction auction_;
    MechanismSpace space_;
    std::optional<std::vector<double>> true_weights_;  // set while building true_model_
    BehaviorModel true_model_;
    CellMask identifiable_;
    mutable std::optional<ErgodicityCertificate> certificate_;
};

double median(std::vector<double> values);

/// Seed of replication k in experiment `tag`.
std::uint64_t replication_seed(std::uint64_t base, std::uint64_t tag, std::size_t k);

struct BehaviorConvergenceRow {
    BehaviorMethod method;
    std::size_t T1;
    std::uint64_t seed;
    double error;          // model_inf_distance over identifiable cells
    double full_error;     // over all cells
    double weight_error;   // ||w_hat - w*||_inf, NaN unless parametric with known w*
    bool converged;
};
struct BehaviorConvergenceSummary {
    std::size_t T1;
    double median_error;
    double tail_frequency;  // fraction of replications with error >= epsilon
    double median_weight_error;
};
struct BehaviorConvergence {
    double epsilon;
    std::vector<BehaviorConvergenceRow> rows;
    std::vector<BehaviorConvergenceSummary> summary;
};
BehaviorConvergence behavior_convergence(const Lab& lab, std::size_t jobs);

struct MechanismConvergenceRow {
    std::size_t T2;
    std::uint64_t seed;
    double sup_deviation;
    std::size_t sequences;
};
struct MechanismConvergence {
    std::vector<MechanismConvergenceRow> rows;
    std::vector<std::pair<std::size_t, double>> medians;  // (T2, median sup deviation)
};
/// sup_a |R_T2(a, M, delta) - R(a, M)| with M the true model.
MechanismConvergence mechanism_convergence(const Lab& lab, std::size_t jobs);

struct AblationRow {
    std::size_t n;
    bool sharing;
    std::size_t T2;
    std::uint64_t seed;
    double sup_deviation;
};
struct AblationSummary {
    std::size_t n;
    bool sharing;
    double median;
};
struct Ablation {
    std::vector<AblationRow> rows;
    std::vector<AblationSummary> summary;
};
/// Single query, signal-independent true model, reserve grid of n points on
/// [0, max bid]. Sharing on uses delta = max bid (one shared sequence);
/// sharing off uses delta = 0 (one sequence per mechanism).
Ablation sharing_ablation(const Lab& lab, std::size_t jobs);

struct EndToEndRow {
    std::size_t T1;
    std::size_t T2;
    std::uint64_t seed;
    double gap;
    Mechanism a_hat;
    double model_error;
    double behavior_bound;  // NaN when the evaluator rejects its inputs
    double uniform_bound;
    double total_bound;
};
struct EndToEndSummary {
    std::size_t T1;
    std::size_t T2;
    double median_gap;
    double max_gap;
};
struct EndToEnd {
    Mechanism a_star;
    double best_risk;
    std::vector<EndToEndRow> rows;
    std::vector<EndToEndSummary> summary;
};
EndToEnd end_to_end(const Lab& lab, std::size_t jobs);

struct BoundCurveRow {
    std::string bound;
    double T;
    double eps;
    double value;
    double log_raw;
    double empirical_tail;  // NaN when no Monte-Carlo counterpart was run
};
std::vector<BoundCurveRow> bound_curves(const Lab& lab, std::size_t jobs);

/// Mixing parameters from the config, with alpha estimated when absent.
MixingParameters mixing_parameters(const Lab& lab);
/// Configured C(M*), or the largest stability estimate over the space.
double stability_constant(const Lab& lab);

struct RunOptions {
    std::filesystem::path out;
    std::size_t jobs = 1;
    std::optional<std::filesystem::path> input;
};

/// Runs one CLI command and returns the files it wrote.
std::vector<std::filesystem::path> run_command(const std::string& command, const Config& config,
                                               const RunOptions& options);

const std::vector<std::string>& command_names();

}  // namespace gtml
