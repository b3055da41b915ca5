#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gtml/behavior_learning.hpp"
#include "gtml/bounds.hpp"
#include "gtml/markov.hpp"
#include "gtml/mechanism_learning.hpp"
#include "gtml/sponsored_search.hpp"

namespace gtml {

inline constexpr int kSchemaVersion = 1;

enum class TrueModelFamily { dirichlet, parametric };

struct TrueModelConfig {
    TrueModelFamily family = TrueModelFamily::dirichlet;
    std::uint64_t seed = 0;
    double floor = 0.01;
    double concentration = 1.0;
    bool signal_independent = false;
    std::vector<double> weights;  // parametric family only
};

struct SimulationConfig {
    std::size_t length = 1000;
    InitMode init = InitMode::stationary;
    std::string initial;             // behavior label for fixed / burn_in starts
    double burn_in_factor = 10.0;    // burn-in discards factor * N0 steps
    std::size_t certificate_max_n = 20;
};

struct BehaviorLearningConfig {
    BehaviorMethod method = BehaviorMethod::nonparametric;
    std::vector<std::size_t> T1{1000, 10000, 100000};
    double epsilon = 0.5;
    ParametricFeatures features{};
    MleOptions mle{};
};

struct MechanismLearningConfig {
    std::vector<std::size_t> T2{100, 1000, 10000};
    double delta = 0.4;
    SharingRule rule = SharingRule::distance;
};

struct AblationConfig {
    std::array<double, kSlots> click_probs{0.5, 0.3};
    std::vector<std::size_t> grid_sizes{5, 50, 500};
    std::size_t T2 = 1000;
    std::size_t replications = 50;
};

struct EndToEndConfig {
    std::vector<std::pair<std::size_t, std::size_t>> sweep{{1000, 100}, {10000, 1000}, {100000, 10000}};
};

struct BoundsConfig {
    double beta0 = 1.0;
    double gamma = 2.0;
    double s = 1.0;
    std::optional<double> alpha;        // estimated from the space when absent
    double C1 = 1.0;
    double C2 = 1.0;
    std::optional<double> stability;    // C(M*); estimated when absent
    double stability_magnitude = 0.05;
    std::size_t n_perturbations = 20;
    std::size_t pdim = 1;
    double behavior_share = 0.5;
    double epsilon = 0.5;
    std::vector<double> T1{1e3, 1e4, 1e5, 1e6};
    std::vector<double> T2{1e3, 1e4, 1e5, 1e6};
    std::size_t tail_replications = 20;
};

struct Config {
    int schema_version = kSchemaVersion;
    std::uint64_t seed = 0;
    std::size_t replications = 20;
    gsp::AuctionSpec auction;
    std::vector<std::vector<double>> behavior_embeddings;
    std::vector<std::vector<double>> signal_embeddings;
    TrueModelConfig true_model;
    Mechanism data_mechanism;
    SimulationConfig simulation;
    BehaviorLearningConfig behavior_learning;
    MechanismLearningConfig mechanism_learning;
    AblationConfig ablation;
    EndToEndConfig end_to_end;
    BoundsConfig bounds;
};

/// Parses the JSON config. Unknown keys, wrong types, a missing or
/// unsupported schema_version, and out-of-range values throw ConfigError.
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);

}  // namespace gtml
