#include "gtml/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "gtml/errors.hpp"
#include "gtml/random.hpp"

namespace gtml {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double x, double y) {
    if (x == kNegInf) return y;
    if (y == kNegInf) return x;
    const double hi = std::max(x, y);
    return hi + std::log1p(std::exp(std::min(x, y) - hi));
}

BoundValue make_bound(double log_raw) {
    return {log_raw, log_raw >= 0.0 ? 1.0 : std::exp(log_raw)};
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void check_common(const MixingParameters& p) {
    for (double v : {p.beta0, p.gamma, p.s, p.alpha, p.K, p.C1, p.C2}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw DomainError("mixing parameters must be finite and non-negative");
        }
    }
}

void check_certificate(const ErgodicityCertificate& cert) {
    if (cert.n0 < 1) throw DomainError("ergodicity certificate needs N0 >= 1");
    if (!(cert.delta0 > 0.0 && cert.delta0 <= 1.0)) {
        throw DomainError("ergodicity certificate needs delta0 in (0, 1]");
    }
}

Vector stationary_for(const BehaviorModel& model, const Environment& env, const Mechanism& a) {
    return stationary_distribution(marginal_kernel(model, MechanismTable(env, a))).probs;
}

std::vector<Vector> stationary_all(const MechanismSpace& space, const BehaviorModel& model,
                                   const Environment& env) {
    std::vector<Vector> out;
    out.reserve(space.size());
    for (const auto& a : space.members) out.push_back(stationary_for(model, env, a));
    return out;
}

}  // namespace

CoverReport greedy_cover(std::size_t n, const IndexDistance& distance, double radius) {
    if (!(radius >= 0.0)) throw InputError("cover radius must be non-negative");
    CoverReport report;
    report.radius = radius;
    report.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool covered = false;
        for (std::size_t r = 0; r < report.representatives.size(); ++r) {
            if (distance(i, report.representatives[r]) <= radius) {
                report.assignment[i] = r;
                covered = true;
                break;
            }
        }
        if (!covered) {
            report.assignment[i] = report.representatives.size();
            report.representatives.push_back(i);
        }
    }
    return report;
}

CoverReport cover(const MechanismSpace& space, double radius) {
    return greedy_cover(
        space.size(),
        [&](std::size_t i, std::size_t j) { return space.distance(space.members[i], space.members[j]); },
        radius);
}

CoverReport tv_cover(const MechanismSpace& space, const BehaviorModel& model,
                     const Environment& env, double radius) {
    const auto pis = stationary_all(space, model, env);
    return greedy_cover(
        space.size(), [&](std::size_t i, std::size_t j) { return tv_distance(pis[i], pis[j]); },
        radius);
}

CoverDominance check_tv_cover_dominance(const MechanismSpace& space, const BehaviorModel& model,
                                        const Environment& env, double radius, double alpha) {
    CoverDominance out{cover(space, radius), 0.0, true};
    const auto pis = stationary_all(space, model, env);
    for (std::size_t i = 0; i < space.size(); ++i) {
        const std::size_t rep = out.dA_cover.representatives[out.dA_cover.assignment[i]];
        out.max_tv_to_representative =
            std::max(out.max_tv_to_representative, tv_distance(pis[i], pis[rep]));
    }
    out.holds = out.max_tv_to_representative <= alpha * radius + 1e-12;
    return out;
}

double lipschitz_estimate(const MechanismSpace& space, const BehaviorModel& model,
                          const Environment& env) {
    if (space.size() < 2) throw InputError("Lipschitz estimate needs at least two mechanisms");
    const auto pis = stationary_all(space, model, env);
    double best = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < space.size(); ++i) {
        for (std::size_t j = i + 1; j < space.size(); ++j) {
            const double d = space.distance(space.members[i], space.members[j]);
            if (!(d > 0.0)) continue;
            any = true;
            best = std::max(best, tv_distance(pis[i], pis[j]) / d);
        }
    }
    if (!any) throw DomainError("all mechanism pairs are at distance zero");
    return best;
}

BehaviorModel random_perturbation(const BehaviorModel& model, double magnitude, Rng& rng,
                                  const std::vector<BehaviorId>& order) {
    if (!(magnitude > 0.0)) throw InputError("perturbation magnitude must be positive");
    const std::size_t nb = model.num_behaviors();
    std::vector<BehaviorId> perm = order;
    if (perm.empty()) {
        perm.resize(nb);
        std::iota(perm.begin(), perm.end(), BehaviorId{0});
    }
    if (perm.size() != nb) throw InputError("perturbation order must list every behavior");
    const double lambda = 0.5 * magnitude * (1.0 - uniform01(rng));
    std::gamma_distribution<double> gamma(1.0, 1.0);
    std::vector<Matrix> ms = model.matrices();
    for (auto& m : ms) {
        for (BehaviorId b : perm) {
            const auto row = static_cast<Eigen::Index>(b);
            Vector d(static_cast<Eigen::Index>(nb));
            for (BehaviorId c : perm) d(static_cast<Eigen::Index>(c)) = gamma(rng);
            d /= d.sum();
            m.row(row) = (1.0 - lambda) * m.row(row) + lambda * d.transpose();
        }
    }
    return BehaviorModel(nb, std::move(ms));
}

StabilityEstimate stability_constant_estimate(const BehaviorModel& model, const Environment& env,
                                              const Mechanism& mechanism,
                                              std::size_t n_perturbations, double magnitude,
                                              std::uint64_t seed) {
    const MechanismTable table(env, mechanism);
    const auto base = stationary_distribution(marginal_kernel(model, table)).probs;
    std::vector<BehaviorId> order(model.num_behaviors());
    std::iota(order.begin(), order.end(), BehaviorId{0});
    std::stable_sort(order.begin(), order.end(), [&](BehaviorId x, BehaviorId y) {
        return base(static_cast<Eigen::Index>(x)) < base(static_cast<Eigen::Index>(y));
    });
    StabilityEstimate out;
    Rng rng(seed);
    for (std::size_t k = 0; k < n_perturbations; ++k) {
        const auto perturbed = random_perturbation(model, magnitude, rng, order);
        const double dist = model_inf_distance(model, perturbed);
        if (!(dist > 0.0)) {
            ++out.skipped;
            continue;
        }
        try {
            const auto pi = stationary_distribution(marginal_kernel(perturbed, table)).probs;
            const double ratio = tv_distance(base, pi) / dist;
            out.ratios.push_back(ratio);
            out.c_hat = std::max(out.c_hat, ratio);
            ++out.evaluated;
        } catch (const NotErgodicError&) {
            ++out.skipped;
        } catch (const ConvergenceError&) {
            ++out.skipped;
        }
    }
    return out;
}

BoundValue behavior_bound_parametric(double T1, double eps, const MixingParameters& params,
                                     std::size_t num_behaviors, std::size_t num_signals,
                                     const ErgodicityCertificate& cert) {
    check_common(params);
    check_certificate(cert);
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    if (!(params.C1 > 0.0)) throw DomainError("C1 must be positive");
    const double B = static_cast<double>(num_behaviors);
    const double H = static_cast<double>(num_signals);
    const double N0 = static_cast<double>(cert.n0);
    const double threshold = 2.0 * params.C1 * N0 / (B * B * H * cert.delta0 * eps);
    if (!(T1 > threshold)) {
        throw DomainError("parametric behavior bound needs T1 > " + fmt(threshold));
    }
    const double a = T1 * eps * B * B * H * cert.delta0 - 2.0 * params.C1 * N0;
    return make_bound(std::log(2.0) - a * a / (2.0 * T1 * N0 * N0 * params.C1 * params.C1));
}

BoundValue behavior_bound_nonparametric(double T1, double eps, const MixingParameters& params,
                                        std::size_t num_behaviors, std::size_t num_signals,
                                        const ErgodicityCertificate& cert) {
    check_common(params);
    check_certificate(cert);
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    if (!(params.C2 > 0.0)) throw DomainError("C2 must be positive");
    const double B = static_cast<double>(num_behaviors);
    const double H = static_cast<double>(num_signals);
    const double N0 = static_cast<double>(cert.n0);
    const double threshold = 2.0 * N0 * (B + 1.0) / (B * H * cert.delta0 * params.C2 * eps);
    if (!(T1 > threshold)) {
        throw DomainError("non-parametric behavior bound needs T1 > " + fmt(threshold));
    }
    const double a = params.C2 * T1 * cert.delta0 * B * H * eps - 2.0 * N0 * (B + 1.0);
    const double lead = std::log(2.0 * H * B * B * (B + 1.0));
    return make_bound(lead - a * a / (2.0 * T1 * N0 * N0 * (B + 1.0) * (B + 1.0)));
}

CoveringNumberProvider pdim_provider(std::size_t num_behaviors, std::size_t pdim, double K) {
    if (pdim < 1) throw DomainError("pseudo-dimension must be at least 1");
    if (!(K > 0.0)) throw DomainError("loss bound K must be positive");
    const double exponent = 16.0 * static_cast<double>(num_behaviors) * static_cast<double>(pdim);
    const double min_t2 = 4.0 * static_cast<double>(num_behaviors) * static_cast<double>(pdim);
    return {"pdim", [exponent, min_t2, K](double eps_prime, double T2, std::size_t) {
                if (!(T2 > min_t2)) {
                    throw DomainError("pseudo-dimension covering bound needs T2 > " + fmt(min_t2));
                }
                if (!(eps_prime > 0.0)) throw DomainError("covering scale must be positive");
                return exponent * (1.0 + std::log(T2) + std::log(K) - std::log(eps_prime));
            }};
}

CoveringNumberProvider table_provider(std::vector<double> n1) {
    if (n1.empty()) throw InputError("covering-number table is empty");
    for (double v : n1) {
        if (!(v >= 1.0)) throw DomainError("covering numbers must be at least 1");
    }
    return {"table", [n1 = std::move(n1)](double, double, std::size_t group) {
                return std::log(n1.size() == 1 ? n1.front() : n1.at(group));
            }};
}

namespace {

struct UniformTerms {
    double eps_prime;
    double rate;          // (eps - delta alpha K)^2 / (128 K^2)
    double blocks;        // ceil(T2^(s/(1+s)) / 2)
    double log_mixing;    // log(beta0 ceil(T2^((s-gamma)/(1+s))))
};

UniformTerms uniform_terms(double T2, double eps, double delta, const MixingParameters& p,
                           std::size_t cover_cardinality) {
    check_common(p);
    if (!(p.K > 0.0)) throw DomainError("loss bound K must be positive");
    if (!(p.s > 0.0 && p.s < p.gamma)) throw DomainError("s must lie in (0, gamma)");
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    if (!(T2 >= 1.0)) throw DomainError("T2 must be at least 1");
    if (cover_cardinality < 1) throw DomainError("cover cardinality must be at least 1");
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    const double slack = eps - p.K * p.alpha * delta;
    if (!(slack > 0.0)) {
        throw DomainError("delta must be below eps / (K alpha) = " +
                          fmt(eps / (p.K * p.alpha)));
    }
    UniformTerms t;
    t.eps_prime = slack / 16.0;
    t.rate = slack * slack / (128.0 * p.K * p.K);
    t.blocks = std::ceil(std::pow(T2, p.s / (1.0 + p.s)) / 2.0);
    const double mix = std::ceil(std::pow(T2, (p.s - p.gamma) / (1.0 + p.s)));
    t.log_mixing = p.beta0 > 0.0 ? std::log(p.beta0 * mix) : kNegInf;
    return t;
}

}  // namespace

BoundValue uniform_bound(double T2, double eps, double delta, const MixingParameters& params,
                         std::size_t cover_cardinality, const CoveringNumberProvider& n1) {
    const auto t = uniform_terms(T2, eps, delta, params, cover_cardinality);
    double worst = kNegInf;
    for (std::size_t i = 0; i < cover_cardinality; ++i) {
        worst = std::max(worst, std::log(16.0) + n1.log_n1(t.eps_prime, T2, i) - t.rate * t.blocks);
    }
    return make_bound(std::log(static_cast<double>(cover_cardinality)) +
                      log_add(worst, t.log_mixing));
}

BoundValue uniform_bound(double T2, double eps, double delta, const MixingParameters& params,
                         const CoverReport& cover, const CoveringNumberProvider& n1) {
    return uniform_bound(T2, eps, delta, params, cover.cardinality(), n1);
}

BoundValue corollary_bound(double T2, double eps, double delta, const MixingParameters& params,
                           std::size_t cover_cardinality, std::size_t num_behaviors,
                           std::size_t pdim) {
    const auto t = uniform_terms(T2, eps, delta, params, cover_cardinality);
    if (pdim < 1) throw DomainError("pseudo-dimension must be at least 1");
    const double d = 16.0 * static_cast<double>(num_behaviors) * static_cast<double>(pdim);
    const double min_t2 = 4.0 * static_cast<double>(num_behaviors) * static_cast<double>(pdim);
    if (!(T2 > min_t2)) {
        throw DomainError("pseudo-dimension covering bound needs T2 > " + fmt(min_t2));
    }
    const double constant = std::log(16.0) + d * (1.0 + std::log(params.K) - std::log(t.eps_prime));
    const double dominant = constant + d * std::log(T2) - t.rate * t.blocks;
    return make_bound(std::log(static_cast<double>(cover_cardinality)) +
                      log_add(dominant, t.log_mixing));
}

double corollary_rate_log(double T2, const MixingParameters& params,
                          std::size_t cover_cardinality, std::size_t num_behaviors,
                          std::size_t pdim) {
    if (!(params.s > 0.0 && params.s < params.gamma)) {
        throw DomainError("s must lie in (0, gamma)");
    }
    if (!(T2 >= 1.0)) throw DomainError("T2 must be at least 1");
    const double d = 16.0 * static_cast<double>(num_behaviors) * static_cast<double>(pdim);
    const double lt = std::log(T2);
    const double first = d * lt - std::pow(T2, params.s / (1.0 + params.s));
    const double second = (params.s - params.gamma) / (1.0 + params.s) * lt;
    return std::log(static_cast<double>(cover_cardinality)) + log_add(first, second);
}

TotalBound total_bound(double T1, double T2, double eps, const TotalBoundInputs& in) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    if (!(in.behavior_share > 0.0 && in.behavior_share < 1.0)) {
        throw DomainError("eps split must give both terms a positive share");
    }
    if (!(in.stability >= 0.0) || !std::isfinite(in.stability)) {
        throw DomainError("stability constant must be finite and non-negative");
    }
    TotalBound out{};
    out.eps2 = 0.5 * (1.0 - in.behavior_share) * eps;
    if (in.stability > 0.0) {
        out.eps1 = in.behavior_share * eps / (2.0 * in.params.K * in.stability);
        out.behavior = in.method == BehaviorMethod::parametric
                           ? behavior_bound_parametric(T1, out.eps1, in.params, in.num_behaviors,
                                                       in.num_signals, in.cert)
                           : behavior_bound_nonparametric(T1, out.eps1, in.params,
                                                          in.num_behaviors, in.num_signals,
                                                          in.cert);
    } else {
        out.eps1 = std::numeric_limits<double>::infinity();
        out.behavior = {kNegInf, 0.0};
    }
    out.uniform = uniform_bound(T2, out.eps2, in.delta, in.params, in.cover_cardinality, in.n1);
    out.total = make_bound(log_add(out.behavior.log_raw, out.uniform.log_raw));
    return out;
}

DecompositionReport decomposition_check(const BehaviorModel& m_star, const BehaviorModel& m_hat,
                                        const MechanismSpace& space, const Environment& env,
                                        const DecompositionOptions& options) {
    if (space.members.empty()) throw InputError("mechanism space is empty");
    DecompositionReport rep;
    const double K = env.loss.bound;

    std::vector<double> true_risk;
    true_risk.reserve(space.size());
    std::size_t star = 0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        true_risk.push_back(exact_risk(space.members[i], m_star, env));
        const bool better = true_risk[i] < true_risk[star] ||
                            (true_risk[i] == true_risk[star] &&
                             space.members[i] < space.members[star]);
        if (better) star = i;
    }
    rep.a_star = space.members[star];

    std::size_t hat = 0;
    if (options.exact_surrogate) {
        std::vector<double> learned;
        for (std::size_t i = 0; i < space.size(); ++i) {
            learned.push_back(exact_risk(space.members[i], m_hat, env));
            const bool better = learned[i] < learned[hat] ||
                                (learned[i] == learned[hat] && space.members[i] < space.members[hat]);
            if (better) hat = i;
        }
        rep.sup_deviation = 0.0;
    } else {
        Rng user_rng(split_seed(options.seed, 0));
        const auto users = sample_users(env.users, options.T2, user_rng);
        ErmOptions erm{options.rule, options.radius, split_seed(options.seed, 1), &m_hat, {}};
        const auto result = erm_search(space, m_hat, env, users, erm);
        for (std::size_t i = 0; i < result.table.size(); ++i) {
            const auto& row = result.table[i];
            rep.sup_deviation =
                std::max(rep.sup_deviation, std::abs(row.empirical_risk - *row.exact_risk));
            if (row.mechanism == result.best) hat = i;
        }
    }
    rep.a_hat = space.members[hat];
    rep.lhs = true_risk[hat] - true_risk[star];

    rep.model_distance = model_inf_distance(m_star, m_hat);
    if (rep.model_distance > 0.0) {
        for (std::size_t i = 0; i < space.size(); ++i) {
            const auto est = stability_constant_estimate(
                m_star, env, space.members[i], options.n_perturbations, rep.model_distance,
                split_seed(options.seed, 2 + i));
            rep.c_hat = std::max(rep.c_hat, est.c_hat);
            rep.skipped_perturbations += est.skipped;
        }
    }
    rep.behavior_term = 2.0 * K * rep.c_hat * rep.model_distance;
    rep.sharing_term = 2.0 * rep.sup_deviation;
    rep.rhs = rep.behavior_term + rep.sharing_term;
    rep.holds = rep.lhs <= rep.rhs + 1e-12;
    return rep;
}

}  // namespace gtml
