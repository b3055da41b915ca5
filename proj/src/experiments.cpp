#include "gtml/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "gtml/errors.hpp"
#include "gtml/io.hpp"
#include "gtml/mechanism_learning.hpp"
#include "gtml/random.hpp"

namespace gtml {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Experiment tags for replication_seed.
enum : std::uint64_t {
    kTagSimulate = 0,
    kTagBehavior = 1,
    kTagMechanism = 2,
    kTagAblation = 3,
    kTagEndToEnd = 4,
    kTagBehaviorTail = 5,
    kTagUniformTail = 6,
    kTagTotalTail = 7,
    kTagStability = 8,
};

/// Runs fn(0..n-1) on up to `jobs` threads. Each index writes only its own
/// result slot, so output order never depends on scheduling. The first
/// failing index (in index order) is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    std::vector<std::exception_ptr> errors(n);
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> threads;
        for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

gsp::Auction make_auction(const Config& c) {
    try {
        return gsp::Auction(c.auction, c.behavior_embeddings, c.signal_embeddings);
    } catch (const InputError& e) {
        throw ConfigError(std::string("auction: ") + e.what());
    }
}

BehaviorModel make_model(const Config& c, const gsp::Auction& auction,
                         std::optional<std::vector<double>>& weights) {
    const auto& env = auction.environment();
    try {
        if (c.true_model.family == TrueModelFamily::parametric) {
            ParametricFamily family(env.behaviors, env.signals, c.behavior_learning.features);
            if (c.true_model.weights.size() != family.dim()) {
                throw ConfigError("true_model.weights: expected " + std::to_string(family.dim()) +
                                  " values for the configured features");
            }
            weights = c.true_model.weights;
            return family.materialize(*weights);
        }
        return gsp::make_true_model({env.behaviors.size(), env.signals.size(), c.true_model.floor,
                                     c.true_model.concentration, c.true_model.signal_independent},
                                    c.true_model.seed);
    } catch (const InputError& e) {
        throw ConfigError(std::string("true_model: ") + e.what());
    }
}

std::vector<double> exact_risks(const MechanismSpace& space, const BehaviorModel& model,
                                const Environment& env) {
    std::vector<double> out;
    out.reserve(space.size());
    for (const auto& a : space.members) out.push_back(exact_risk(a, model, env));
    return out;
}

std::size_t argmin_risk(const MechanismSpace& space, const std::vector<double>& risks) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < risks.size(); ++i) {
        if (risks[i] < risks[best] ||
            (risks[i] == risks[best] && space.members[i] < space.members[best])) {
            best = i;
        }
    }
    return best;
}

std::size_t index_in(const MechanismSpace& space, const Mechanism& a) {
    const auto it = std::find(space.members.begin(), space.members.end(), a);
    if (it == space.members.end()) throw InputError("mechanism not in space");
    return static_cast<std::size_t>(it - space.members.begin());
}

double sup_deviation(const ErmResult& result, const std::vector<double>& exact) {
    double d = 0.0;
    for (std::size_t i = 0; i < result.table.size(); ++i) {
        d = std::max(d, std::abs(result.table[i].empirical_risk - exact[i]));
    }
    return d;
}

std::vector<std::size_t> to_sizes(const std::vector<double>& v) {
    std::vector<std::size_t> out;
    for (double x : v) out.push_back(static_cast<std::size_t>(std::llround(x)));
    return out;
}

}  // namespace

double median(std::vector<double> values) {
    if (values.empty()) return kNaN;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::uint64_t replication_seed(std::uint64_t base, std::uint64_t tag, std::size_t k) {
    return split_seed(split_seed(base, tag), k);
}

Lab::Lab(Config config)
    : config_(std::move(config)),
      auction_(make_auction(config_)),
      space_(auction_.mechanism_space()),
      true_model_(make_model(config_, auction_, true_weights_)) {
    try {
        auction_.check_mechanism(config_.data_mechanism);
        if (!config_.simulation.initial.empty()) {
            (void)env().behaviors.index_of(config_.simulation.initial);
        }
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    identifiable_ = reachable_cells(true_model_, MechanismTable(env(), config_.data_mechanism));
}

ParametricFamily Lab::family() const {
    return ParametricFamily(env().behaviors, env().signals, config_.behavior_learning.features);
}

const ErgodicityCertificate& Lab::certificate() const {
    static std::mutex mu;
    std::lock_guard lock(mu);
    if (!certificate_) {
        certificate_ = ergodicity_certificate(true_model_, env().signal, config_.data_mechanism,
                                              env().users, config_.simulation.certificate_max_n);
    }
    return *certificate_;
}

Trajectory Lab::simulate(std::size_t length, std::uint64_t seed) const {
    SimulationOptions options;
    options.init = config_.simulation.init;
    if (!config_.simulation.initial.empty()) {
        options.initial = env().behaviors.index_of(config_.simulation.initial);
    }
    if (options.init == InitMode::burn_in) {
        options.burn_in_steps = static_cast<std::size_t>(
            std::ceil(config_.simulation.burn_in_factor * static_cast<double>(certificate().n0)));
    }
    return gtml::simulate(true_model_, config_.data_mechanism, env(), length, options, seed);
}

Lab::Fit Lab::fit(const Trajectory& traj, std::uint64_t seed) const {
    if (config_.behavior_learning.method == BehaviorMethod::nonparametric) {
        auto [model, report] = fit_nonparametric(traj, num_behaviors(), num_signals());
        return {std::move(model), std::move(report), std::nullopt};
    }
    MleOptions mle = config_.behavior_learning.mle;
    mle.seed = seed;
    auto [pm, report] = fit_parametric(traj, family(), mle);
    return {materialize(pm), std::move(report), pm.w};
}

BehaviorConvergence behavior_convergence(const Lab& lab, std::size_t jobs) {
    const auto& cfg = lab.config();
    const auto& T1s = cfg.behavior_learning.T1;
    const std::size_t reps = cfg.replications;
    BehaviorConvergence out;
    out.epsilon = cfg.behavior_learning.epsilon;
    out.rows.resize(T1s.size() * reps);
    parallel_for(out.rows.size(), jobs, [&](std::size_t task) {
        const std::size_t T1 = T1s[task / reps];
        const std::size_t k = task % reps;
        const std::uint64_t seed = replication_seed(cfg.seed, kTagBehavior, k);
        const auto traj = lab.simulate(T1, split_seed(seed, 0));
        const auto fit = lab.fit(traj, split_seed(seed, 1));
        double werr = kNaN;
        if (fit.weights && lab.true_weights()) {
            werr = 0.0;
            for (std::size_t i = 0; i < fit.weights->size(); ++i) {
                werr = std::max(werr, std::abs((*fit.weights)[i] - (*lab.true_weights())[i]));
            }
        }
        out.rows[task] = {cfg.behavior_learning.method,
                          T1,
                          seed,
                          model_inf_distance(lab.true_model(), fit.model, lab.identifiable_cells()),
                          model_inf_distance(lab.true_model(), fit.model),
                          werr,
                          fit.report.converged};
    });
    for (std::size_t i = 0; i < T1s.size(); ++i) {
        std::vector<double> errs;
        std::vector<double> werrs;
        std::size_t tail = 0;
        for (std::size_t k = 0; k < reps; ++k) {
            const auto& r = out.rows[i * reps + k];
            errs.push_back(r.error);
            if (!std::isnan(r.weight_error)) werrs.push_back(r.weight_error);
            if (r.error >= out.epsilon) ++tail;
        }
        out.summary.push_back({T1s[i], median(errs),
                               static_cast<double>(tail) / static_cast<double>(reps),
                               median(werrs)});
    }
    return out;
}

MechanismConvergence mechanism_convergence(const Lab& lab, std::size_t jobs) {
    const auto& cfg = lab.config();
    const auto& T2s = cfg.mechanism_learning.T2;
    const std::size_t reps = cfg.replications;
    const auto exact = exact_risks(lab.space(), lab.true_model(), lab.env());
    MechanismConvergence out;
    out.rows.resize(T2s.size() * reps);
    parallel_for(out.rows.size(), jobs, [&](std::size_t task) {
        const std::size_t T2 = T2s[task / reps];
        const std::size_t k = task % reps;
        const std::uint64_t seed = replication_seed(cfg.seed, kTagMechanism, k);
        Rng user_rng(split_seed(seed, 0));
        const auto users = sample_users(lab.env().users, T2, user_rng);
        const ErmOptions erm{cfg.mechanism_learning.rule, cfg.mechanism_learning.delta,
                             split_seed(seed, 1), nullptr, {}};
        const auto result = erm_search(lab.space(), lab.true_model(), lab.env(), users, erm);
        out.rows[task] = {T2, seed, sup_deviation(result, exact), result.generated};
    });
    for (std::size_t i = 0; i < T2s.size(); ++i) {
        std::vector<double> devs;
        for (std::size_t k = 0; k < reps; ++k) devs.push_back(out.rows[i * reps + k].sup_deviation);
        out.medians.emplace_back(T2s[i], median(devs));
    }
    return out;
}

Ablation sharing_ablation(const Lab& lab, std::size_t jobs) {
    const auto& cfg = lab.config();
    const auto& ab = cfg.ablation;
    gsp::AuctionSpec spec = cfg.auction;
    spec.queries = {{"q", 1.0, ab.click_probs}};
    spec.reserve_grid = {0.0};
    const gsp::Auction auction(spec, cfg.behavior_embeddings, cfg.signal_embeddings);
    const auto& env = auction.environment();
    const auto model = gsp::make_true_model({env.behaviors.size(), env.signals.size(),
                                             cfg.true_model.floor, cfg.true_model.concentration,
                                             true},
                                            cfg.true_model.seed);
    const double top = auction.max_bid();

    std::vector<MechanismSpace> spaces;
    std::vector<std::vector<double>> exact;
    for (std::size_t n : ab.grid_sizes) {
        std::vector<double> grid(n);
        for (std::size_t i = 0; i < n; ++i) {
            grid[i] = n == 1 ? 0.0 : top * static_cast<double>(i) / static_cast<double>(n - 1);
        }
        spaces.push_back(auction.mechanism_space(grid));
        exact.push_back(exact_risks(spaces.back(), model, env));
    }

    const std::size_t reps = ab.replications;
    Ablation out;
    out.rows.resize(ab.grid_sizes.size() * reps * 2);
    parallel_for(ab.grid_sizes.size() * reps, jobs, [&](std::size_t task) {
        const std::size_t g = task / reps;
        const std::size_t k = task % reps;
        const std::uint64_t seed = replication_seed(cfg.seed, kTagAblation, k);
        Rng user_rng(split_seed(seed, 0));
        const auto users = sample_users(env.users, ab.T2, user_rng);
        for (int on = 0; on < 2; ++on) {
            const ErmOptions erm{SharingRule::distance, on ? top : 0.0, split_seed(seed, 1),
                                 nullptr, {}};
            const auto result = erm_search(spaces[g], model, env, users, erm);
            out.rows[task * 2 + static_cast<std::size_t>(on)] = {
                ab.grid_sizes[g], on == 1, ab.T2, seed, sup_deviation(result, exact[g])};
        }
    });
    for (std::size_t g = 0; g < ab.grid_sizes.size(); ++g) {
        for (int on = 0; on < 2; ++on) {
            std::vector<double> devs;
            for (std::size_t k = 0; k < reps; ++k) {
                devs.push_back(out.rows[(g * reps + k) * 2 + static_cast<std::size_t>(on)].sup_deviation);
            }
            out.summary.push_back({ab.grid_sizes[g], on == 1, median(devs)});
        }
    }
    return out;
}

MixingParameters mixing_parameters(const Lab& lab) {
    const auto& b = lab.config().bounds;
    MixingParameters p;
    p.beta0 = b.beta0;
    p.gamma = b.gamma;
    p.s = b.s;
    p.C1 = b.C1;
    p.C2 = b.C2;
    p.K = lab.loss_bound();
    p.alpha = b.alpha ? *b.alpha
                      : (lab.space().size() >= 2
                             ? lipschitz_estimate(lab.space(), lab.true_model(), lab.env())
                             : 0.0);
    return p;
}

double stability_constant(const Lab& lab) {
    const auto& b = lab.config().bounds;
    if (b.stability) return *b.stability;
    double c = 0.0;
    for (std::size_t i = 0; i < lab.space().size(); ++i) {
        const auto est = stability_constant_estimate(
            lab.true_model(), lab.env(), lab.space().members[i], b.n_perturbations,
            b.stability_magnitude, replication_seed(lab.config().seed, kTagStability, i));
        c = std::max(c, est.c_hat);
    }
    return c;
}

namespace {

TotalBoundInputs total_inputs(const Lab& lab) {
    const auto& cfg = lab.config();
    TotalBoundInputs in;
    in.params = mixing_parameters(lab);
    in.cert = lab.certificate();
    in.num_behaviors = lab.num_behaviors();
    in.num_signals = lab.num_signals();
    in.method = cfg.behavior_learning.method;
    in.stability = stability_constant(lab);
    in.behavior_share = cfg.bounds.behavior_share;
    in.delta = cfg.mechanism_learning.delta;
    in.cover_cardinality = cover(lab.space(), cfg.mechanism_learning.delta).cardinality();
    in.n1 = pdim_provider(lab.num_behaviors(), cfg.bounds.pdim, in.params.K);
    return in;
}

BoundValue behavior_bound(const TotalBoundInputs& in, double T1, double eps) {
    return in.method == BehaviorMethod::parametric
               ? behavior_bound_parametric(T1, eps, in.params, in.num_behaviors, in.num_signals,
                                           in.cert)
               : behavior_bound_nonparametric(T1, eps, in.params, in.num_behaviors,
                                              in.num_signals, in.cert);
}

template <class Fn>
BoundValue or_nan(Fn&& fn) {
    try {
        return fn();
    } catch (const DomainError&) {
        return {kNaN, kNaN};
    }
}

}  // namespace

EndToEnd end_to_end(const Lab& lab, std::size_t jobs) {
    const auto& cfg = lab.config();
    const auto& sweep = cfg.end_to_end.sweep;
    const std::size_t reps = cfg.replications;
    const auto exact = exact_risks(lab.space(), lab.true_model(), lab.env());
    const std::size_t star = argmin_risk(lab.space(), exact);
    const auto in = total_inputs(lab);
    const double eps = cfg.bounds.epsilon;

    EndToEnd out;
    out.a_star = lab.space().members[star];
    out.best_risk = exact[star];
    out.rows.resize(sweep.size() * reps);
    parallel_for(out.rows.size(), jobs, [&](std::size_t task) {
        const auto [T1, T2] = sweep[task / reps];
        const std::size_t k = task % reps;
        const std::uint64_t seed = replication_seed(cfg.seed, kTagEndToEnd, k);
        const auto traj = lab.simulate(T1, split_seed(seed, 0));
        const auto fit = lab.fit(traj, split_seed(seed, 1));
        Rng user_rng(split_seed(seed, 2));
        const auto users = sample_users(lab.env().users, T2, user_rng);
        const ErmOptions erm{cfg.mechanism_learning.rule, cfg.mechanism_learning.delta,
                             split_seed(seed, 3), nullptr, {}};
        const auto result = erm_search(lab.space(), fit.model, lab.env(), users, erm);
        const std::size_t hat = index_in(lab.space(), result.best);

        const auto total = [&]() -> std::optional<TotalBound> {
            try {
                return total_bound(static_cast<double>(T1), static_cast<double>(T2), eps, in);
            } catch (const DomainError&) {
                return std::nullopt;
            }
        }();
        EndToEndRow row{T1, T2, seed, exact[hat] - exact[star], result.best,
                        model_inf_distance(lab.true_model(), fit.model),
                        kNaN, kNaN, kNaN};
        if (total) {
            row.behavior_bound = total->behavior.value;
            row.uniform_bound = total->uniform.value;
            row.total_bound = total->total.value;
        } else {
            const double eps2 = 0.5 * (1.0 - in.behavior_share) * eps;
            row.uniform_bound = or_nan([&] {
                return uniform_bound(static_cast<double>(T2), eps2, in.delta, in.params,
                                     in.cover_cardinality, in.n1);
            }).value;
            if (in.stability > 0.0) {
                const double eps1 = in.behavior_share * eps / (2.0 * in.params.K * in.stability);
                row.behavior_bound =
                    or_nan([&] { return behavior_bound(in, static_cast<double>(T1), eps1); }).value;
            }
        }
        out.rows[task] = row;
    });
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        std::vector<double> gaps;
        for (std::size_t k = 0; k < reps; ++k) gaps.push_back(out.rows[i * reps + k].gap);
        out.summary.push_back(
            {sweep[i].first, sweep[i].second, median(gaps), *std::max_element(gaps.begin(), gaps.end())});
    }
    return out;
}

std::vector<BoundCurveRow> bound_curves(const Lab& lab, std::size_t jobs) {
    const auto& cfg = lab.config();
    const auto& b = cfg.bounds;
    const double eps = b.epsilon;
    const auto in = total_inputs(lab);
    const auto exact = exact_risks(lab.space(), lab.true_model(), lab.env());
    const std::size_t star = argmin_risk(lab.space(), exact);
    const std::size_t reps = b.tail_replications;
    const auto T1s = to_sizes(b.T1);
    const auto T2s = to_sizes(b.T2);

    auto tail_frequency = [&](const std::vector<double>& stats) {
        if (stats.empty()) return kNaN;
        const auto hits = std::count_if(stats.begin(), stats.end(), [&](double v) { return v >= eps; });
        return static_cast<double>(hits) / static_cast<double>(stats.size());
    };

    std::vector<double> behavior_err(T1s.size() * reps);
    parallel_for(behavior_err.size(), jobs, [&](std::size_t task) {
        const std::uint64_t seed = replication_seed(cfg.seed, kTagBehaviorTail, task % reps);
        const auto traj = lab.simulate(std::max<std::size_t>(2, T1s[task / reps]), split_seed(seed, 0));
        const auto fit = lab.fit(traj, split_seed(seed, 1));
        behavior_err[task] = model_inf_distance(lab.true_model(), fit.model, lab.identifiable_cells());
    });
    std::vector<double> uniform_dev(T2s.size() * reps);
    parallel_for(uniform_dev.size(), jobs, [&](std::size_t task) {
        const std::uint64_t seed = replication_seed(cfg.seed, kTagUniformTail, task % reps);
        Rng user_rng(split_seed(seed, 0));
        const auto users = sample_users(lab.env().users, T2s[task / reps], user_rng);
        const ErmOptions erm{cfg.mechanism_learning.rule, cfg.mechanism_learning.delta,
                             split_seed(seed, 1), nullptr, {}};
        uniform_dev[task] = sup_deviation(
            erm_search(lab.space(), lab.true_model(), lab.env(), users, erm), exact);
    });
    const std::size_t n_total = std::min(T1s.size(), T2s.size());
    std::vector<double> total_gap(n_total * reps);
    parallel_for(total_gap.size(), jobs, [&](std::size_t task) {
        const std::size_t i = task / reps;
        const std::uint64_t seed = replication_seed(cfg.seed, kTagTotalTail, task % reps);
        const auto traj = lab.simulate(std::max<std::size_t>(2, T1s[i]), split_seed(seed, 0));
        const auto fit = lab.fit(traj, split_seed(seed, 1));
        Rng user_rng(split_seed(seed, 2));
        const auto users = sample_users(lab.env().users, T2s[i], user_rng);
        const ErmOptions erm{cfg.mechanism_learning.rule, cfg.mechanism_learning.delta,
                             split_seed(seed, 3), nullptr, {}};
        const auto result = erm_search(lab.space(), fit.model, lab.env(), users, erm);
        total_gap[task] = exact[index_in(lab.space(), result.best)] - exact[star];
    });
    auto slice = [&](const std::vector<double>& v, std::size_t i) {
        return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(i * reps),
                                   v.begin() + static_cast<std::ptrdiff_t>((i + 1) * reps));
    };

    std::vector<BoundCurveRow> rows;
    const std::string behavior_name =
        in.method == BehaviorMethod::parametric ? "behavior_parametric" : "behavior_nonparametric";
    for (std::size_t i = 0; i < T1s.size(); ++i) {
        const auto v = or_nan([&] { return behavior_bound(in, b.T1[i], eps); });
        rows.push_back({behavior_name, b.T1[i], eps, v.value, v.log_raw,
                        tail_frequency(slice(behavior_err, i))});
    }
    for (std::size_t i = 0; i < T2s.size(); ++i) {
        const auto tail = tail_frequency(slice(uniform_dev, i));
        const auto u = or_nan([&] {
            return uniform_bound(b.T2[i], eps, in.delta, in.params, in.cover_cardinality, in.n1);
        });
        rows.push_back({"uniform", b.T2[i], eps, u.value, u.log_raw, tail});
        const auto c = or_nan([&] {
            return corollary_bound(b.T2[i], eps, in.delta, in.params, in.cover_cardinality,
                                   in.num_behaviors, b.pdim);
        });
        rows.push_back({"corollary", b.T2[i], eps, c.value, c.log_raw, tail});
    }
    for (std::size_t i = 0; i < n_total; ++i) {
        const auto t = [&]() -> BoundValue {
            try {
                return total_bound(b.T1[i], b.T2[i], eps, in).total;
            } catch (const DomainError&) {
                return {kNaN, kNaN};
            }
        }();
        rows.push_back({"total", b.T2[i], eps, t.value, t.log_raw,
                        tail_frequency(slice(total_gap, i))});
    }
    return rows;
}

namespace {

using Paths = std::vector<std::filesystem::path>;

const char* method_name(BehaviorMethod m) {
    return m == BehaviorMethod::parametric ? "parametric" : "nonparametric";
}

Paths cmd_simulate(const Lab& lab, const RunOptions& opt) {
    const auto& cfg = lab.config();
    const auto traj = lab.simulate(cfg.simulation.length, cfg.seed);
    const auto path = opt.out / "trajectory.txt";
    auto out = io::open_output(path);
    io::write_trajectory(out, traj, lab.env());
    const auto model_path = opt.out / "true_model.txt";
    auto mout = io::open_output(model_path);
    io::write_model(mout, lab.true_model(), lab.env().behaviors, lab.env().signals);
    return {path, model_path};
}

Paths cmd_fit_behavior(const Lab& lab, const RunOptions& opt) {
    const auto& cfg = lab.config();
    Trajectory traj;
    if (opt.input) {
        std::ifstream in(*opt.input);
        if (!in) throw InputError("cannot read trajectory " + opt.input->string());
        traj = io::read_trajectory(in, lab.env());
    } else {
        traj = lab.simulate(cfg.simulation.length, cfg.seed);
    }
    const auto fit = lab.fit(traj, split_seed(cfg.seed, 1));
    const auto model_path = opt.out / "fitted_model.txt";
    auto mout = io::open_output(model_path);
    io::write_model(mout, fit.model, lab.env().behaviors, lab.env().signals);

    nlohmann::json report;
    report["method"] = method_name(cfg.behavior_learning.method);
    report["length"] = traj.size();
    report["converged"] = fit.report.converged;
    report["iterations"] = fit.report.iterations;
    report["gradient_norm"] = fit.report.gradient_norm;
    report["diagnostic"] = fit.report.diagnostic;
    report["log_likelihood"] = fit.report.log_likelihood;
    report["fallback_cells"] = fit.report.fallback_cells.size();
    report["renormalized"] = fit.report.renormalized;
    if (fit.weights) report["weights"] = *fit.weights;
    report["inf_distance_to_true_identifiable"] =
        model_inf_distance(lab.true_model(), fit.model, lab.identifiable_cells());
    report["inf_distance_to_true"] = model_inf_distance(lab.true_model(), fit.model);
    const auto report_path = opt.out / "fit_report.json";
    auto rout = io::open_output(report_path);
    rout << report.dump(2) << '\n';
    return {model_path, report_path};
}

Paths cmd_behavior_convergence(const Lab& lab, const RunOptions& opt) {
    const auto res = behavior_convergence(lab, opt.jobs);
    const auto rows_path = opt.out / "behavior_convergence.csv";
    io::CsvWriter rows(rows_path, {"method", "T1", "seed", "inf_distance_error",
                                   "full_inf_distance", "weight_error", "converged"});
    for (const auto& r : res.rows) {
        rows << method_name(r.method) << r.T1 << r.seed << r.error << r.full_error << r.weight_error
             << (r.converged ? 1 : 0);
        rows.end_row();
    }
    rows.close();
    const auto sum_path = opt.out / "behavior_convergence_summary.csv";
    io::CsvWriter sum(sum_path, {"method", "T1", "replications", "median_error", "epsilon",
                                 "tail_frequency", "median_weight_error"});
    for (const auto& s : res.summary) {
        sum << method_name(lab.config().behavior_learning.method) << s.T1
            << lab.config().replications << s.median_error << res.epsilon << s.tail_frequency
            << s.median_weight_error;
        sum.end_row();
    }
    sum.close();
    return {rows_path, sum_path};
}

Paths cmd_mechanism_convergence(const Lab& lab, const RunOptions& opt) {
    const auto& cfg = lab.config();
    const auto res = mechanism_convergence(lab, opt.jobs);
    const auto rows_path = opt.out / "mechanism_convergence.csv";
    io::CsvWriter rows(rows_path, {"T2", "seed", "sup_deviation", "cache_sequences"});
    for (const auto& r : res.rows) {
        rows << r.T2 << r.seed << r.sup_deviation << r.sequences;
        rows.end_row();
    }
    rows.close();
    const auto sum_path = opt.out / "mechanism_convergence_summary.csv";
    io::CsvWriter sum(sum_path, {"T2", "replications", "median_sup_deviation"});
    for (const auto& [T2, med] : res.medians) {
        sum << T2 << cfg.replications << med;
        sum.end_row();
    }
    sum.close();

    // Per-candidate risk table of the first replication at the largest T2.
    const std::size_t T2 = *std::max_element(cfg.mechanism_learning.T2.begin(),
                                             cfg.mechanism_learning.T2.end());
    const std::uint64_t seed = replication_seed(cfg.seed, kTagMechanism, 0);
    Rng user_rng(split_seed(seed, 0));
    const auto users = sample_users(lab.env().users, T2, user_rng);
    const ErmOptions erm{cfg.mechanism_learning.rule, cfg.mechanism_learning.delta,
                         split_seed(seed, 1), &lab.true_model(), {}};
    const auto result = erm_search(lab.space(), lab.true_model(), lab.env(), users, erm);
    std::vector<std::string> cols;
    for (const auto& q : cfg.auction.queries) cols.push_back("reserve_" + q.label);
    for (const char* c : {"empirical_risk", "exact_risk", "cache_hit", "representative"}) {
        cols.emplace_back(c);
    }
    const auto table_path = opt.out / "risk_table.csv";
    io::CsvWriter table(table_path, cols);
    for (const auto& r : result.table) {
        for (double p : r.mechanism.params) table << p;
        table << r.empirical_risk << (r.exact_risk ? *r.exact_risk : kNaN) << (r.cache_hit ? 1 : 0)
              << r.representative;
        table.end_row();
    }
    table.close();
    return {rows_path, sum_path, table_path};
}

Paths cmd_sharing_ablation(const Lab& lab, const RunOptions& opt) {
    const auto res = sharing_ablation(lab, opt.jobs);
    const auto rows_path = opt.out / "sharing_ablation.csv";
    io::CsvWriter rows(rows_path, {"n", "sharing", "T2", "seed", "sup_deviation"});
    for (const auto& r : res.rows) {
        rows << r.n << (r.sharing ? "on" : "off") << r.T2 << r.seed << r.sup_deviation;
        rows.end_row();
    }
    rows.close();
    const auto sum_path = opt.out / "sharing_ablation_summary.csv";
    io::CsvWriter sum(sum_path, {"n", "sharing", "replications", "median_sup_deviation"});
    for (const auto& s : res.summary) {
        sum << s.n << (s.sharing ? "on" : "off") << lab.config().ablation.replications << s.median;
        sum.end_row();
    }
    sum.close();
    return {rows_path, sum_path};
}

Paths cmd_end_to_end(const Lab& lab, const RunOptions& opt) {
    const auto res = end_to_end(lab, opt.jobs);
    const auto rows_path = opt.out / "end_to_end.csv";
    io::CsvWriter rows(rows_path, {"T1", "T2", "seed", "gap", "a_hat", "model_error",
                                   "behavior_bound", "uniform_bound", "total_bound"});
    for (const auto& r : res.rows) {
        rows << r.T1 << r.T2 << r.seed << r.gap << r.a_hat.key() << r.model_error
             << r.behavior_bound << r.uniform_bound << r.total_bound;
        rows.end_row();
    }
    rows.close();

    nlohmann::json summary;
    summary["loss_bound"] = lab.loss_bound();
    summary["a_star"] = res.a_star.params;
    summary["best_risk"] = res.best_risk;
    summary["replications"] = lab.config().replications;
    summary["sweep"] = nlohmann::json::array();
    for (const auto& s : res.summary) {
        summary["sweep"].push_back(
            {{"T1", s.T1}, {"T2", s.T2}, {"median_gap", s.median_gap}, {"max_gap", s.max_gap}});
    }
    const auto json_path = opt.out / "end_to_end_summary.json";
    auto jout = io::open_output(json_path);
    jout << summary.dump(2) << '\n';
    return {rows_path, json_path};
}

Paths cmd_bounds(const Lab& lab, const RunOptions& opt) {
    const auto rows = bound_curves(lab, opt.jobs);
    const auto path = opt.out / "bounds.csv";
    io::CsvWriter out(path, {"bound", "T", "eps", "bound_value", "log_bound_raw",
                             "empirical_tail_estimate"});
    for (const auto& r : rows) {
        out << r.bound << r.T << r.eps << r.value << r.log_raw << r.empirical_tail;
        out.end_row();
    }
    out.close();
    return {path};
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{
        "simulate",       "fit-behavior", "behavior-convergence", "mechanism-convergence",
        "sharing-ablation", "end-to-end", "bounds"};
    return names;
}

std::vector<std::filesystem::path> run_command(const std::string& command, const Config& config,
                                               const RunOptions& options) {
    const Lab lab(config);
    if (command == "simulate") return cmd_simulate(lab, options);
    if (command == "fit-behavior") return cmd_fit_behavior(lab, options);
    if (command == "behavior-convergence") return cmd_behavior_convergence(lab, options);
    if (command == "mechanism-convergence") return cmd_mechanism_convergence(lab, options);
    if (command == "sharing-ablation") return cmd_sharing_ablation(lab, options);
    if (command == "end-to-end") return cmd_end_to_end(lab, options);
    if (command == "bounds") return cmd_bounds(lab, options);
    throw ConfigError("unknown command '" + command + "'");
}

}  // namespace gtml
