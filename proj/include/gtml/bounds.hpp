#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gtml/core.hpp"
#include "gtml/markov.hpp"
#include "gtml/mechanism_learning.hpp"

namespace gtml {

/// Mixing and proof constants fed to the bound evaluators.
struct MixingParameters {
    double beta0 = 1.0;  // beta(a, m) <= beta0 m^-gamma
    double gamma = 2.0;
    double s = 1.0;      // in (0, gamma)
    double alpha = 1.0;  // TV-Lipschitz constant of a -> pi_a
    double K = 1.0;      // loss bound
    double C1 = 1.0;
    double C2 = 1.0;
};

/// Probability bound. `log_raw` is the log of the unclamped expression, which
/// stays finite when the expression itself over- or underflows; `value` is
/// the expression clamped to [0, 1].
struct BoundValue {
    double log_raw;
    double value;
};

// ---------------------------------------------------------------- covers

struct CoverReport {
    double radius = 0.0;
    std::vector<std::size_t> representatives;  // member indices, in selection order
    std::vector<std::size_t> assignment;       // member -> position in representatives

    std::size_t cardinality() const noexcept { return representatives.size(); }
};

using IndexDistance = std::function<double(std::size_t, std::size_t)>;

/// First-fit greedy net over members 0..n-1: a member becomes a representative
/// when no earlier representative lies within `radius`. Its size is an upper
/// bound on the minimal covering number.
CoverReport greedy_cover(std::size_t n, const IndexDistance& distance, double radius);

/// Greedy net under the space's own metric d_A.
CoverReport cover(const MechanismSpace& space, double radius);

/// Greedy net under the induced metric TV(pi_a, pi_a') for `model`.
CoverReport tv_cover(const MechanismSpace& space, const BehaviorModel& model,
                     const Environment& env, double radius);

/// Largest TV(pi_a, pi_rep(a)) over the d_A cover at `radius`; the d_A cover is
/// also a TV cover of radius alpha * radius when this is <= alpha * radius.
struct CoverDominance {
    CoverReport dA_cover;
    double max_tv_to_representative;
    bool holds;  // max_tv_to_representative <= alpha * radius
};
CoverDominance check_tv_cover_dominance(const MechanismSpace& space, const BehaviorModel& model,
                                        const Environment& env, double radius, double alpha);

// ---------------------------------------------------------------- estimates

/// max over pairs with d_A > 0 of TV(pi_a, pi_a') / d_A(a, a'). A lower bound
/// on the true Lipschitz constant. Throws DomainError when every pair is at
/// distance zero, InputError for fewer than two mechanisms.
double lipschitz_estimate(const MechanismSpace& space, const BehaviorModel& model,
                          const Environment& env);

/// M' = (1 - lambda) M + lambda D with Dirichlet(1) rows D and
/// lambda ~ U(0, magnitude / 2], so model_inf_distance(M, M') <= magnitude.
/// Rows are drawn in `order` (a permutation of behaviors); the identity order
/// is used when empty.
BehaviorModel random_perturbation(const BehaviorModel& model, double magnitude, Rng& rng,
                                  const std::vector<BehaviorId>& order = {});

struct StabilityEstimate {
    double c_hat = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;            // perturbations that broke ergodicity
    std::vector<double> ratios;         // per evaluated perturbation, in draw order
};

/// max over random perturbations of TV(pi(M), pi(M')) / model_inf_distance(M, M')
/// for the chain induced by `mechanism`. Rows are drawn in order of increasing
/// stationary probability so the estimate does not depend on state labels.
StabilityEstimate stability_constant_estimate(const BehaviorModel& model, const Environment& env,
                                              const Mechanism& mechanism,
                                              std::size_t n_perturbations, double magnitude,
                                              std::uint64_t seed);

// ---------------------------------------------------------------- evaluators

/// Parametric behavior-learning tail bound
///   2 exp(-(T1 eps |B|^2 |H| delta0 - 2 C1 N0)^2 / (2 T1 N0^2 C1^2)).
/// Requires T1 > 2 C1 N0 / (|B|^2 |H| delta0 eps); throws DomainError otherwise.
BoundValue behavior_bound_parametric(double T1, double eps, const MixingParameters& params,
                                     std::size_t num_behaviors, std::size_t num_signals,
                                     const ErgodicityCertificate& cert);

/// Non-parametric behavior-learning tail bound
///   2 |H| |B|^2 (|B|+1) exp(-(C2 T1 delta0 |B| |H| eps - 2 N0 (|B|+1))^2 / (2 T1 N0^2 (|B|+1)^2)).
/// Requires T1 > 2 N0 (|B|+1) / (|B| |H| delta0 C2 eps).
BoundValue behavior_bound_nonparametric(double T1, double eps, const MixingParameters& params,
                                        std::size_t num_behaviors, std::size_t num_signals,
                                        const ErgodicityCertificate& cert);

/// Second-layer covering numbers: log N1(eps', T2) for cover group `group`.
struct CoveringNumberProvider {
    std::string name;
    std::function<double(double eps_prime, double T2, std::size_t group)> log_n1;
};

/// (e T2 K / eps')^(16 |B| pdim), valid for T2 > 4 |B| pdim (DomainError otherwise).
CoveringNumberProvider pdim_provider(std::size_t num_behaviors, std::size_t pdim, double K);

/// Fixed N1 per group; a single entry applies to every group.
CoveringNumberProvider table_provider(std::vector<double> n1);

/// Uniform-convergence bound
///   N max_i (16 N1_i((eps - K alpha delta)/16, T2) exp(-(eps - delta alpha K)^2 / (128 K^2)
///            * ceil(T2^(s/(1+s)) / 2)) + beta0 ceil(T2^((s-gamma)/(1+s))))
/// with N = cover_cardinality. Requires delta in (0, eps / (K alpha)) and s in (0, gamma).
BoundValue uniform_bound(double T2, double eps, double delta, const MixingParameters& params,
                         std::size_t cover_cardinality, const CoveringNumberProvider& n1);
BoundValue uniform_bound(double T2, double eps, double delta, const MixingParameters& params,
                         const CoverReport& cover, const CoveringNumberProvider& n1);

/// The uniform bound with the pseudo-dimension covering number substituted,
/// written with T2^(16 |B| pdim) factored out:
///   N (16 (e K / eps')^(16 |B| pdim) T2^(16 |B| pdim) exp(-c ceil(T2^(s/(1+s)) / 2))
///      + beta0 ceil(T2^((s-gamma)/(1+s)))).
BoundValue corollary_bound(double T2, double eps, double delta, const MixingParameters& params,
                           std::size_t cover_cardinality, std::size_t num_behaviors,
                           std::size_t pdim);

/// Constant-free rate N (T2^(16 |B| pdim) e^(-T2^(s/(1+s))) + T2^((s-gamma)/(1+s))), log scale.
double corollary_rate_log(double T2, const MixingParameters& params,
                          std::size_t cover_cardinality, std::size_t num_behaviors,
                          std::size_t pdim);

enum class BehaviorMethod { parametric, nonparametric };

struct TotalBoundInputs {
    MixingParameters params;
    ErgodicityCertificate cert;
    std::size_t num_behaviors = 0;
    std::size_t num_signals = 0;
    BehaviorMethod method = BehaviorMethod::nonparametric;
    double stability = 1.0;        // C(M*) or an estimate of it
    double behavior_share = 0.5;   // fraction of eps spent on 2 K C eps1
    double delta = 0.0;
    std::size_t cover_cardinality = 1;
    CoveringNumberProvider n1;
};

struct TotalBound {
    double eps1;
    double eps2;
    BoundValue behavior;
    BoundValue uniform;
    BoundValue total;
};

/// Behavior bound at eps1 plus uniform bound at eps2 with eps = 2 K C eps1 + 2 eps2,
/// the split set by behavior_share. A zero stability constant removes the
/// behavior term. Throws DomainError for a share outside (0, 1).
TotalBound total_bound(double T1, double T2, double eps, const TotalBoundInputs& in);

// ---------------------------------------------------------------- decomposition

struct DecompositionOptions {
    std::size_t T2 = 1000;
    SharingRule rule = SharingRule::distance;
    double radius = 0.0;
    std::size_t n_perturbations = 20;
    std::uint64_t seed = 0;
    /// Replace empirical risks with exact risks under M_hat (the T2 -> infinity surrogate).
    bool exact_surrogate = false;
};

struct DecompositionReport {
    Mechanism a_hat;
    Mechanism a_star;
    double lhs = 0.0;               // R(a_hat, M*) - R(a*, M*)
    double model_distance = 0.0;    // ||M* - M_hat||_inf
    double c_hat = 0.0;
    double sup_deviation = 0.0;     // sup_a |R(a, M_hat) - R_T2(a, M_hat, delta)|
    double behavior_term = 0.0;     // 2 K c_hat ||M* - M_hat||_inf
    double sharing_term = 0.0;      // 2 sup_deviation
    double rhs = 0.0;
    bool holds = false;
    std::size_t skipped_perturbations = 0;
};

/// Exact gap of the bi-level ERM output against both right-hand terms. C(M*)
/// is replaced by the largest stability estimate over the space, at the
/// realized model distance.
DecompositionReport decomposition_check(const BehaviorModel& m_star, const BehaviorModel& m_hat,
                                        const MechanismSpace& space, const Environment& env,
                                        const DecompositionOptions& options);

}  // namespace gtml
