#include "gtml/markov.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "gtml/errors.hpp"

namespace gtml {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ULL;

// reach[i][j]: j reachable from i in >= 0 steps over positive entries.
std::vector<std::vector<bool>> reachability(const Matrix& kernel) {
    const std::size_t n = static_cast<std::size_t>(kernel.rows());
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<std::size_t> stack{s};
        reach[s][s] = true;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v = 0; v < n; ++v) {
                if (kernel(idx(u), idx(v)) > 0.0 && !reach[s][v]) {
                    reach[s][v] = true;
                    stack.push_back(v);
                }
            }
        }
    }
    return reach;
}

// Recurrent states of the unique closed class; throws when the chain is not
// unichain or the class is periodic.
std::vector<bool> recurrent_class(const Matrix& kernel) {
    const std::size_t n = static_cast<std::size_t>(kernel.rows());
    if (n == 0 || kernel.cols() != kernel.rows()) {
        throw InputError("kernel must be a non-empty square matrix");
    }
    const auto reach = reachability(kernel);
    std::vector<bool> recurrent(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n && recurrent[i]; ++j) {
            if (reach[i][j] && !reach[j][i]) recurrent[i] = false;
        }
    }
    std::size_t root = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (!recurrent[i]) continue;
        if (root == n) {
            root = i;
        } else if (!reach[root][i]) {
            throw NotErgodicError("chain has more than one closed class");
        }
    }
    if (root == n) throw NotErgodicError("chain has no recurrent state");

    // Period of the closed class: gcd of level[u] + 1 - level[v] over its edges.
    std::vector<long> level(n, -1);
    std::queue<std::size_t> q;
    level[root] = 0;
    q.push(root);
    long period = 0;
    while (!q.empty()) {
        const std::size_t u = q.front();
        q.pop();
        for (std::size_t v = 0; v < n; ++v) {
            if (!recurrent[v] || kernel(idx(u), idx(v)) <= 0.0) continue;
            if (level[v] < 0) {
                level[v] = level[u] + 1;
                q.push(v);
            } else {
                period = std::gcd(period, std::labs(level[u] + 1 - level[v]));
            }
        }
    }
    if (period != 1) {
        throw NotErgodicError("closed class is periodic with period " + std::to_string(period));
    }
    return recurrent;
}

}  // namespace

MechanismTable::MechanismTable(const Environment& env, const Mechanism& mechanism)
    : num_behaviors_(env.behaviors.size()), num_atoms_(env.users.support().size()) {
    const auto& support = env.users.support();
    signals_.resize(num_behaviors_ * num_atoms_);
    losses_.resize(num_behaviors_ * num_atoms_);
    signal_probs_ = Matrix::Zero(idx(num_behaviors_), idx(env.signals.size()));
    expected_loss_ = Vector::Zero(idx(num_behaviors_));
    for (BehaviorId b = 0; b < num_behaviors_; ++b) {
        for (std::size_t k = 0; k < num_atoms_; ++k) {
            const SignalId h = env.signal.eval(mechanism, b, support[k].sample);
            if (h >= env.signals.size()) {
                throw InputError("signal function returned an index outside the signal space");
            }
            const double l = env.loss.eval(mechanism, b, support[k].sample);
            signals_[b * num_atoms_ + k] = h;
            losses_[b * num_atoms_ + k] = l;
            signal_probs_(idx(b), idx(h)) += support[k].prob;
            expected_loss_(idx(b)) += support[k].prob * l;
        }
    }
}

std::uint64_t fingerprint(const BehaviorModel& model) {
    std::uint64_t h = kFnvBasis;
    for (const auto& m : model.matrices()) {
        h = fnv1a(h, m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    }
    return h;
}

std::uint64_t fingerprint(const UserDistribution& users) {
    std::uint64_t h = kFnvBasis;
    for (const auto& atom : users.support()) {
        h = fnv1a(h, &atom.prob, sizeof(double));
        h = fnv1a(h, &atom.sample.query, sizeof(atom.sample.query));
        h = fnv1a(h, atom.sample.clicks.data(), atom.sample.clicks.size());
    }
    return h;
}

std::size_t sample_discrete(const Vector& probs, Rng& rng) {
    const double total = probs.sum();
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (Index i = 0; i < probs.size(); ++i) {
        if (probs(i) <= 0.0) continue;
        acc += probs(i);
        last_positive = static_cast<std::size_t>(i);
        if (u < acc) return last_positive;
    }
    return last_positive;
}

BehaviorId step(const BehaviorModel& model, BehaviorId b, SignalId h, Rng& rng) {
    if (b >= model.num_behaviors()) throw InputError("unknown behavior index");
    if (h >= model.num_signals()) throw InputError("unknown signal index");
    const Matrix& m = model.matrix(h);
    const Index n = m.cols();
    double total = 0.0;
    for (Index c = 0; c < n; ++c) total += m(idx(b), c);
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    BehaviorId last_positive = 0;
    for (Index c = 0; c < n; ++c) {
        const double p = m(idx(b), c);
        if (p <= 0.0) continue;
        acc += p;
        last_positive = static_cast<BehaviorId>(c);
        if (u < acc) return last_positive;
    }
    return last_positive;
}

std::vector<std::size_t> sample_users(const UserDistribution& users, std::size_t length,
                                      Rng& rng) {
    std::vector<std::size_t> out(length);
    for (auto& k : out) k = users.sample_index(rng);
    return out;
}

std::vector<BehaviorId> simulate_behaviors(const BehaviorModel& model, const MechanismTable& table,
                                           const std::vector<std::size_t>& user_atoms,
                                           BehaviorId start, Rng& rng) {
    std::vector<BehaviorId> out;
    out.reserve(user_atoms.size());
    BehaviorId b = start;
    for (std::size_t t = 0; t < user_atoms.size(); ++t) {
        out.push_back(b);
        if (t + 1 < user_atoms.size()) b = step(model, b, table.signal(b, user_atoms[t]), rng);
    }
    return out;
}

Trajectory simulate(const BehaviorModel& model, const Mechanism& mechanism,
                    const Environment& env, std::size_t length, const SimulationOptions& options,
                    std::uint64_t seed) {
    if (length < 1) throw InputError("trajectory length must be at least 1");
    if (model.num_behaviors() != env.behaviors.size() ||
        model.num_signals() != env.signals.size()) {
        throw InputError("behavior model does not match the environment spaces");
    }
    const MechanismTable table(env, mechanism);
    Rng rng(seed);
    BehaviorId b = options.initial;
    if (options.init == InitMode::stationary) {
        const auto pi = stationary_distribution(marginal_kernel(model, table), options.stationary);
        b = sample_discrete(pi.probs, rng);
    } else {
        if (b >= model.num_behaviors()) throw InputError("initial behavior out of range");
        if (options.init == InitMode::burn_in) {
            for (std::size_t i = 0; i < options.burn_in_steps; ++i) {
                const SignalId h = table.signal(b, env.users.sample_index(rng));
                b = step(model, b, h, rng);
            }
        }
    }

    Trajectory traj;
    traj.mechanism = mechanism;
    traj.seed = seed;
    traj.records.reserve(length);
    const auto& support = env.users.support();
    for (std::size_t t = 0; t < length; ++t) {
        const std::size_t atom = env.users.sample_index(rng);
        const SignalId h = table.signal(b, atom);
        traj.records.push_back({b, h, support[atom].sample});
        if (t + 1 < length) b = step(model, b, h, rng);
    }
    return traj;
}

Matrix marginal_kernel(const BehaviorModel& model, const MechanismTable& table) {
    const Index n = idx(model.num_behaviors());
    const Matrix& q = table.signal_probs();
    if (q.rows() != n || q.cols() != idx(model.num_signals())) {
        throw InputError("mechanism table does not match the behavior model");
    }
    Matrix kernel = Matrix::Zero(n, n);
    for (Index b = 0; b < n; ++b) {
        for (Index h = 0; h < q.cols(); ++h) {
            const double w = q(b, h);
            if (w != 0.0) kernel.row(b) += w * model.matrix(static_cast<SignalId>(h)).row(b);
        }
    }
    return kernel;
}

MarginalKernel marginal_kernel(const BehaviorModel& model, const Mechanism& mechanism,
                               const Environment& env) {
    const MechanismTable table(env, mechanism);
    return {marginal_kernel(model, table),
            {mechanism.key(), fingerprint(model), fingerprint(env.users)}};
}

MarginalKernel marginal_kernel(const BehaviorModel& model, const Mechanism& mechanism,
                               const SignalFunction& sig, const UserDistribution& users) {
    const Index n = idx(model.num_behaviors());
    Matrix kernel = Matrix::Zero(n, n);
    for (const auto& atom : users.support()) {
        if (atom.prob == 0.0) continue;
        for (Index b = 0; b < n; ++b) {
            const SignalId h = sig.eval(mechanism, static_cast<BehaviorId>(b), atom.sample);
            if (h >= model.num_signals()) throw InputError("signal index outside the model");
            kernel.row(b) += atom.prob * model.matrix(h).row(b);
        }
    }
    return {std::move(kernel), {mechanism.key(), fingerprint(model), fingerprint(users)}};
}

void check_unichain_aperiodic(const Matrix& kernel) { (void)recurrent_class(kernel); }

StationaryDistribution stationary_distribution(const Matrix& kernel,
                                               const StationaryOptions& options) {
    recurrent_class(kernel);
    const Index n = kernel.rows();
    const Matrix transposed = kernel.transpose();
    Vector pi = Vector::Constant(n, 1.0 / static_cast<double>(n));
    double residual = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < options.max_iters; ++it) {
        Vector next = transposed * pi;
        residual = (next - pi).lpNorm<1>();
        if (residual <= options.tol) return {pi, residual, it};
        pi = next / next.sum();
    }
    std::ostringstream os;
    os << "power iteration did not converge in " << options.max_iters
       << " iterations (residual " << residual << ")";
    throw ConvergenceError(os.str(), residual);
}

StationaryDistribution stationary_distribution(const MarginalKernel& kernel,
                                               const StationaryOptions& options) {
    return stationary_distribution(kernel.matrix, options);
}

double exact_risk(const Mechanism& mechanism, const BehaviorModel& model, const Environment& env,
                  const StationaryOptions& options) {
    const MechanismTable table(env, mechanism);
    const auto pi = stationary_distribution(marginal_kernel(model, table), options);
    return pi.probs.dot(table.expected_loss());
}

double exact_risk(const Mechanism& mechanism, const BehaviorModel& model,
                  const LossFunction& loss, const SignalFunction& sig,
                  const UserDistribution& users, const StationaryOptions& options) {
    const auto kernel = marginal_kernel(model, mechanism, sig, users);
    const auto pi = stationary_distribution(kernel, options);
    double risk = 0.0;
    for (BehaviorId b = 0; b < model.num_behaviors(); ++b) {
        double inner = 0.0;
        for (const auto& atom : users.support()) {
            inner += atom.prob * loss.eval(mechanism, b, atom.sample);
        }
        risk += pi.probs(idx(b)) * inner;
    }
    return risk;
}

ErgodicityCertificate ergodicity_certificate(const BehaviorModel& model, const SignalFunction& sig,
                                             const Mechanism& mechanism,
                                             const UserDistribution& users, std::size_t max_n) {
    if (max_n < 1) throw InputError("max_n must be at least 1");
    const std::size_t nb = model.num_behaviors();
    const std::size_t nh = model.num_signals();

    Matrix q = Matrix::Zero(idx(nb), idx(nh));
    for (const auto& atom : users.support()) {
        for (BehaviorId b = 0; b < nb; ++b) {
            const SignalId h = sig.eval(mechanism, b, atom.sample);
            if (h >= nh) throw InputError("signal index outside the model");
            q(idx(b), idx(h)) += atom.prob;
        }
    }
    Matrix kernel = Matrix::Zero(idx(nb), idx(nb));
    for (BehaviorId b = 0; b < nb; ++b) {
        for (SignalId h = 0; h < nh; ++h) {
            kernel.row(idx(b)) += q(idx(b), idx(h)) * model.matrix(h).row(idx(b));
        }
    }
    const std::vector<bool> recurrent = recurrent_class(kernel);

    // Augmented state (next, cur, h) is kept when cur is recurrent and its
    // one-step weight w = q(h|cur) M_h(cur, next) is positive. The N-step
    // probability between kept states X = (x', x, g) and Y = (y', y, h) is
    // K^{N-1}(x', y) w(Y).
    std::vector<double> min_weight(nb, std::numeric_limits<double>::infinity());
    std::vector<bool> is_next(nb, false);
    std::size_t states = 0;
    for (BehaviorId cur = 0; cur < nb; ++cur) {
        if (!recurrent[cur]) continue;
        for (SignalId h = 0; h < nh; ++h) {
            for (BehaviorId next = 0; next < nb; ++next) {
                const double w = q(idx(cur), idx(h)) * model(h, cur, next);
                if (w > 0.0) {
                    ++states;
                    min_weight[cur] = std::min(min_weight[cur], w);
                    is_next[next] = true;
                }
            }
        }
    }

    Matrix power = Matrix::Identity(idx(nb), idx(nb));
    for (std::size_t n0 = 1; n0 <= max_n; ++n0) {
        double delta = std::numeric_limits<double>::infinity();
        for (BehaviorId x = 0; x < nb && delta > 0.0; ++x) {
            if (!is_next[x]) continue;
            for (BehaviorId y = 0; y < nb; ++y) {
                if (!std::isfinite(min_weight[y])) continue;
                delta = std::min(delta, power(idx(x), idx(y)) * min_weight[y]);
            }
        }
        if (delta > 0.0 && std::isfinite(delta)) return {n0, delta, states};
        power = power * kernel;
    }
    throw NotErgodicError("no all-positive power of the augmented chain up to N = " +
                          std::to_string(max_n));
}

double model_inf_distance(const BehaviorModel& m1, const BehaviorModel& m2) {
    const CellMask all(m1.num_signals(), std::vector<bool>(m1.num_behaviors(), true));
    return model_inf_distance(m1, m2, all);
}

double model_inf_distance(const BehaviorModel& m1, const BehaviorModel& m2, const CellMask& mask) {
    if (m1.num_behaviors() != m2.num_behaviors() || m1.num_signals() != m2.num_signals()) {
        throw InputError("models are defined over different spaces");
    }
    if (mask.size() != m1.num_signals()) throw InputError("cell mask has the wrong signal count");
    double d = 0.0;
    for (SignalId h = 0; h < m1.num_signals(); ++h) {
        if (mask[h].size() != m1.num_behaviors()) {
            throw InputError("cell mask has the wrong behavior count");
        }
        for (BehaviorId b = 0; b < m1.num_behaviors(); ++b) {
            if (!mask[h][b]) continue;
            d = std::max(d, (m1.matrix(h).row(idx(b)) - m2.matrix(h).row(idx(b))).lpNorm<1>());
        }
    }
    return d;
}

CellMask reachable_cells(const BehaviorModel& model, const MechanismTable& table) {
    const std::vector<bool> recurrent = recurrent_class(marginal_kernel(model, table));
    CellMask mask(model.num_signals(), std::vector<bool>(model.num_behaviors(), false));
    for (SignalId h = 0; h < model.num_signals(); ++h) {
        for (BehaviorId b = 0; b < model.num_behaviors(); ++b) {
            mask[h][b] = recurrent[b] && table.signal_probs()(idx(b), idx(h)) > 0.0;
        }
    }
    return mask;
}

double tv_distance(const Vector& p, const Vector& q) {
    if (p.size() != q.size()) throw InputError("distributions have different lengths");
    return 0.5 * (p - q).lpNorm<1>();
}

double tv_distance(const StationaryDistribution& p, const StationaryDistribution& q) {
    return tv_distance(p.probs, q.probs);
}

}  // namespace gtml
