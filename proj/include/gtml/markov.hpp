#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gtml/core.hpp"

namespace gtml {

/// Signal and loss of one mechanism tabulated over B x support(U).
class MechanismTable {
public:
    MechanismTable(const Environment& env, const Mechanism& mechanism);

    std::size_t num_behaviors() const noexcept { return num_behaviors_; }
    std::size_t num_atoms() const noexcept { return num_atoms_; }

    SignalId signal(BehaviorId b, std::size_t atom) const {
        return signals_[b * num_atoms_ + atom];
    }
    double loss(BehaviorId b, std::size_t atom) const { return losses_[b * num_atoms_ + atom]; }

    /// q(h | b) = sum_u P(u) 1{sig(a, b, u) = h}, shape |B| x |H|.
    const Matrix& signal_probs() const noexcept { return signal_probs_; }

    /// sum_u P(u) L(a, b, u) for each b.
    const Vector& expected_loss() const noexcept { return expected_loss_; }

private:
    std::size_t num_behaviors_;
    std::size_t num_atoms_;
    std::vector<SignalId> signals_;
    std::vector<double> losses_;
    Matrix signal_probs_;
    Vector expected_loss_;
};

/// Content hash used to tag kernels with the inputs they came from.
std::uint64_t fingerprint(const BehaviorModel& model);
std::uint64_t fingerprint(const UserDistribution& users);

struct KernelProvenance {
    std::string mechanism;
    std::uint64_t model = 0;
    std::uint64_t users = 0;
};

/// Behavior-chain kernel P(b'|b) = sum_u P(u) M_{sig(a,b,u)}(b, b').
struct MarginalKernel {
    Matrix matrix;
    KernelProvenance provenance;
};

struct StationaryDistribution {
    Vector probs;
    double residual = 0.0;  // ||pi P - pi||_1
    std::size_t iterations = 0;
};

struct ErgodicityCertificate {
    std::size_t n0 = 0;
    double delta0 = 0.0;
    std::size_t augmented_states = 0;
};

struct StationaryOptions {
    double tol = 1e-12;
    std::size_t max_iters = 1'000'000;
};

/// Draws b' ~ M_h(b, .) with one engine draw.
BehaviorId step(const BehaviorModel& model, BehaviorId b, SignalId h, Rng& rng);

/// Inverse-CDF draw from a probability vector with one engine draw.
std::size_t sample_discrete(const Vector& probs, Rng& rng);

enum class InitMode { fixed, stationary, burn_in };

struct SimulationOptions {
    InitMode init = InitMode::stationary;
    BehaviorId initial = 0;            // start state for fixed and burn_in
    std::size_t burn_in_steps = 0;     // discarded transitions for burn_in
    StationaryOptions stationary{};
};

/// Record t holds u_t ~ U i.i.d., h_t = sig(a, b_t, u_t); b_{t+1} ~ M_{h_t}(b_t, .).
Trajectory simulate(const BehaviorModel& model, const Mechanism& mechanism,
                    const Environment& env, std::size_t length, const SimulationOptions& options,
                    std::uint64_t seed);

/// i.i.d. user draws as indices into users.support().
std::vector<std::size_t> sample_users(const UserDistribution& users, std::size_t length, Rng& rng);

/// Behavior sequence b_1..b_T driven by a fixed user sequence, starting at `start`.
std::vector<BehaviorId> simulate_behaviors(const BehaviorModel& model, const MechanismTable& table,
                                           const std::vector<std::size_t>& user_atoms,
                                           BehaviorId start, Rng& rng);

MarginalKernel marginal_kernel(const BehaviorModel& model, const Mechanism& mechanism,
                               const SignalFunction& sig, const UserDistribution& users);
MarginalKernel marginal_kernel(const BehaviorModel& model, const Mechanism& mechanism,
                               const Environment& env);
Matrix marginal_kernel(const BehaviorModel& model, const MechanismTable& table);

/// Throws NotErgodicError unless the chain has exactly one closed class and
/// that class is aperiodic (transient states are allowed).
void check_unichain_aperiodic(const Matrix& kernel);

/// Power iteration from the uniform vector. Throws NotErgodicError for
/// reducible or periodic kernels and ConvergenceError when max_iters is hit.
StationaryDistribution stationary_distribution(const Matrix& kernel,
                                               const StationaryOptions& options = {});
StationaryDistribution stationary_distribution(const MarginalKernel& kernel,
                                               const StationaryOptions& options = {});

/// R(a, M) = sum_b pi_b(b) sum_u P(u) L(a, b, u).
double exact_risk(const Mechanism& mechanism, const BehaviorModel& model,
                  const LossFunction& loss, const SignalFunction& sig,
                  const UserDistribution& users, const StationaryOptions& options = {});
double exact_risk(const Mechanism& mechanism, const BehaviorModel& model, const Environment& env,
                  const StationaryOptions& options = {});

/// Smallest N0 <= max_n whose N0-step matrix of the chain (b_{t+1}, b_t, h_t),
/// restricted to its recurrent reachable triples, is entrywise positive.
/// Throws NotErgodicError when no such N0 exists.
ErgodicityCertificate ergodicity_certificate(const BehaviorModel& model, const SignalFunction& sig,
                                             const Mechanism& mechanism,
                                             const UserDistribution& users, std::size_t max_n);

/// (signal, behavior) cells, indexed [h][b].
using CellMask = std::vector<std::vector<bool>>;

/// max_h max_b sum_b' |m1_h(b,b') - m2_h(b,b')|.
double model_inf_distance(const BehaviorModel& m1, const BehaviorModel& m2);
/// Same maximum taken only over cells set in `mask`.
double model_inf_distance(const BehaviorModel& m1, const BehaviorModel& m2, const CellMask& mask);

/// Cells (h, b) with positive long-run probability pi(b) q(h|b) under a mechanism.
CellMask reachable_cells(const BehaviorModel& model, const MechanismTable& table);

double tv_distance(const Vector& p, const Vector& q);
double tv_distance(const StationaryDistribution& p, const StationaryDistribution& q);

}  // namespace gtml
