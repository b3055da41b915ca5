#include "gtml/mechanism_learning.hpp"

#include "gtml/errors.hpp"
#include "gtml/random.hpp"

namespace gtml {

SampleSharingCache::SampleSharingCache(std::vector<std::size_t> user_atoms, SharingRule rule,
                                       double radius, std::uint64_t seed,
                                       MechanismDistance distance)
    : users_(std::move(user_atoms)),
      rule_(rule),
      radius_(radius),
      seed_(seed),
      distance_(std::move(distance)) {
    if (users_.empty()) throw InputError("sharing cache needs a non-empty user sequence");
    if (!(radius_ >= 0.0)) throw InputError("sharing radius must be non-negative");
}

SampleSharingCache::Resolution SampleSharingCache::resolve(const Mechanism& a,
                                                           const BehaviorModel& model,
                                                           const Environment& env,
                                                           const StationaryOptions& options) {
    std::optional<MechanismTable> table;
    Vector pi;
    if (rule_ == SharingRule::total_variation) {
        table.emplace(env, a);
        pi = stationary_distribution(marginal_kernel(model, *table), options).probs;
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const double d = rule_ == SharingRule::distance
                             ? distance_(a, entries_[i].representative)
                             : tv_distance(pi, entries_[i].stationary);
        if (d <= radius_) {
            ++hits_;
            return {i, true};
        }
    }
    if (!table) {
        table.emplace(env, a);
        pi = stationary_distribution(marginal_kernel(model, *table), options).probs;
    }
    const std::uint64_t seed = split_seed(seed_, entries_.size());
    Rng rng(seed);
    const BehaviorId start = sample_discrete(pi, rng);
    entries_.push_back({a, simulate_behaviors(model, *table, users_, start, rng), seed, pi});
    return {entries_.size() - 1, false};
}

const std::vector<BehaviorId>& resolve_sample(const Mechanism& a, SampleSharingCache& cache,
                                              const BehaviorModel& model,
                                              const Environment& env) {
    const auto r = cache.resolve(a, model, env);
    return cache.entries()[r.entry].behaviors;
}

double empirical_risk(const Mechanism& a, const std::vector<BehaviorId>& behaviors,
                      const std::vector<std::size_t>& user_atoms, const Environment& env) {
    if (user_atoms.empty()) throw InputError("empirical risk needs T2 >= 1");
    if (behaviors.size() != user_atoms.size()) {
        throw InputError("behavior and user sequences differ in length");
    }
    const MechanismTable table(env, a);
    double sum = 0.0;
    for (std::size_t t = 0; t < behaviors.size(); ++t) sum += table.loss(behaviors[t], user_atoms[t]);
    return sum / static_cast<double>(behaviors.size());
}

double empirical_risk(const Mechanism& a, const BehaviorModel& model, SampleSharingCache& cache,
                      const Environment& env) {
    const auto& seq = resolve_sample(a, cache, model, env);
    return empirical_risk(a, seq, cache.users(), env);
}

ErmResult erm_search(const MechanismSpace& space, const BehaviorModel& model,
                     const Environment& env, const std::vector<std::size_t>& user_atoms,
                     const ErmOptions& options) {
    if (space.members.empty()) throw InputError("mechanism space is empty");
    SampleSharingCache cache(user_atoms, options.rule, options.radius, options.seed,
                             space.distance);
    ErmResult result;
    result.table.reserve(space.size());
    std::optional<std::size_t> best;
    for (const auto& a : space.members) {
        const auto r = cache.resolve(a, model, env, options.stationary);
        ErmRow row{a, empirical_risk(a, cache.entries()[r.entry].behaviors, cache.users(), env),
                   std::nullopt, r.hit, r.entry};
        if (options.exact_model) row.exact_risk = exact_risk(a, *options.exact_model, env,
                                                             options.stationary);
        result.table.push_back(std::move(row));
        const std::size_t i = result.table.size() - 1;
        if (!best) {
            best = i;
            continue;
        }
        const auto& cur = result.table[i];
        const auto& top = result.table[*best];
        if (cur.empirical_risk < top.empirical_risk ||
            (cur.empirical_risk == top.empirical_risk && cur.mechanism < top.mechanism)) {
            best = i;
        }
    }
    result.best = result.table[*best].mechanism;
    result.best_risk = result.table[*best].empirical_risk;
    result.hits = cache.hits();
    result.generated = cache.generated();
    return result;
}

double tv_rule_distance(const Mechanism& a, const Mechanism& a_prime, const BehaviorModel& model,
                        const Environment& env, const StationaryOptions& options) {
    const auto p = stationary_distribution(marginal_kernel(model, MechanismTable(env, a)), options);
    const auto q =
        stationary_distribution(marginal_kernel(model, MechanismTable(env, a_prime)), options);
    return tv_distance(p, q);
}

}  // namespace gtml
