#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gtml/core.hpp"
#include "gtml/markov.hpp"

namespace gtml {

/// How a new mechanism decides whether to reuse an existing behavior sample.
enum class SharingRule {
    distance,         // d_A(a, representative) <= radius
    total_variation,  // TV(pi_a, pi_representative) <= radius under the learning model
};

/// Behavior samples generated so far, all driven by one shared user sequence.
/// Lookup is first-fit in insertion order; representatives are pairwise more
/// than `radius` apart under the active rule.
class SampleSharingCache {
public:
    struct Entry {
        Mechanism representative;
        std::vector<BehaviorId> behaviors;  // length T2
        std::uint64_t seed;                 // generation seed
        Vector stationary;                  // pi of the representative under the model
    };

    SampleSharingCache(std::vector<std::size_t> user_atoms, SharingRule rule, double radius,
                       std::uint64_t seed, MechanismDistance distance = sup_distance);

    const std::vector<std::size_t>& users() const noexcept { return users_; }
    std::size_t length() const noexcept { return users_.size(); }
    SharingRule rule() const noexcept { return rule_; }
    double radius() const noexcept { return radius_; }
    const MechanismDistance& distance() const noexcept { return distance_; }
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::size_t hits() const noexcept { return hits_; }
    std::size_t generated() const noexcept { return entries_.size(); }

    struct Resolution {
        std::size_t entry;  // index into entries()
        bool hit;
    };

    /// s(a, delta): the first representative within radius of a, or a fresh
    /// sample for a (b_1 drawn from pi_a, then b_{t+1} ~ M_{sig(a, b_t, u_t)}).
    Resolution resolve(const Mechanism& a, const BehaviorModel& model, const Environment& env,
                       const StationaryOptions& options = {});

private:
    std::vector<std::size_t> users_;
    SharingRule rule_;
    double radius_;
    std::uint64_t seed_;
    MechanismDistance distance_;
    std::vector<Entry> entries_;
    std::size_t hits_ = 0;
};

/// Behavior sequence for a, generated or reused per the cache rule.
const std::vector<BehaviorId>& resolve_sample(const Mechanism& a, SampleSharingCache& cache,
                                              const BehaviorModel& model, const Environment& env);

/// (1/T) sum_t L(a, b_t, u_t) over given behavior and user sequences.
double empirical_risk(const Mechanism& a, const std::vector<BehaviorId>& behaviors,
                      const std::vector<std::size_t>& user_atoms, const Environment& env);

/// R_T2(a, M, delta) using the cache's resolved sample for a.
double empirical_risk(const Mechanism& a, const BehaviorModel& model, SampleSharingCache& cache,
                      const Environment& env);

struct ErmRow {
    Mechanism mechanism;
    double empirical_risk;
    std::optional<double> exact_risk;
    bool cache_hit;
    std::size_t representative;
};

struct ErmResult {
    Mechanism best;
    double best_risk;
    std::vector<ErmRow> table;  // in enumeration order
    std::size_t hits = 0;
    std::size_t generated = 0;
};

struct ErmOptions {
    SharingRule rule = SharingRule::distance;
    double radius = 0.0;
    std::uint64_t seed = 0;
    /// When set, each row also carries exact_risk under this model.
    const BehaviorModel* exact_model = nullptr;
    StationaryOptions stationary{};
};

/// Exhaustive second-level ERM. Candidates are evaluated in space order with
/// one shared cache; ties go to the lexicographically smallest parameters.
/// Throws InputError for an empty space.
ErmResult erm_search(const MechanismSpace& space, const BehaviorModel& model,
                     const Environment& env, const std::vector<std::size_t>& user_atoms,
                     const ErmOptions& options);

/// TV distance between the stationary laws that a and a' induce under model.
double tv_rule_distance(const Mechanism& a, const Mechanism& a_prime, const BehaviorModel& model,
                        const Environment& env, const StationaryOptions& options = {});

}  // namespace gtml
