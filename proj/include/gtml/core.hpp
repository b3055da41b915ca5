#pragma once

#include <Eigen/Dense>

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gtml/random.hpp"

namespace gtml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using BehaviorId = std::size_t;
using SignalId = std::size_t;

inline constexpr std::size_t kSlots = 2;
inline constexpr double kStochasticTol = 1e-9;

/// Ordered, uniquely labelled finite set with a numeric embedding per label.
class LabelSet {
public:
    LabelSet(std::vector<std::string> labels, std::vector<std::vector<double>> embeddings,
             std::size_t min_size, const char* what);

    std::size_t size() const noexcept { return labels_.size(); }
    const std::string& label(std::size_t i) const { return labels_.at(i); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::vector<double>& embedding(std::size_t i) const { return embeddings_.at(i); }
    std::size_t embedding_dim() const noexcept { return embeddings_.front().size(); }

    /// Throws InputError for an unknown label.
    std::size_t index_of(const std::string& label) const;
    bool contains(const std::string& label) const { return index_.contains(label); }

    bool operator==(const LabelSet& other) const { return labels_ == other.labels_; }

private:
    std::vector<std::string> labels_;
    std::vector<std::vector<double>> embeddings_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Default embedding: the element index scaled to [0, 1].
std::vector<std::vector<double>> index_embeddings(std::size_t n);

class BehaviorSpace : public LabelSet {
public:
    explicit BehaviorSpace(std::vector<std::string> labels,
                           std::vector<std::vector<double>> embeddings = {})
        : LabelSet(std::move(labels), std::move(embeddings), 2, "behavior space") {}
};

class SignalSpace : public LabelSet {
public:
    explicit SignalSpace(std::vector<std::string> labels,
                         std::vector<std::vector<double>> embeddings = {})
        : LabelSet(std::move(labels), std::move(embeddings), 1, "signal space") {}
};

/// One user arrival u = (query, clicks on slots 1 and 2).
struct UserSample {
    std::size_t query = 0;
    std::array<std::uint8_t, kSlots> clicks{};

    bool operator==(const UserSample&) const = default;
};

struct QuerySpec {
    std::string label;
    double prob = 0.0;
    std::array<double, kSlots> click_probs{};
};

/// Finite i.i.d. user law: a query distribution and independent per-slot clicks.
class UserDistribution {
public:
    struct Atom {
        UserSample sample;
        double prob;
    };

    explicit UserDistribution(std::vector<QuerySpec> queries);

    std::size_t num_queries() const noexcept { return queries_.size(); }
    const QuerySpec& query(std::size_t q) const { return queries_.at(q); }
    const std::vector<QuerySpec>& queries() const noexcept { return queries_; }

    /// All (query, clicks) outcomes in query-major, then click-lexicographic order.
    const std::vector<Atom>& support() const noexcept { return support_; }

    /// Index into support(); consumes exactly one engine draw.
    std::size_t sample_index(Rng& rng) const;

private:
    std::vector<QuerySpec> queries_;
    std::vector<Atom> support_;
    std::vector<double> cumulative_;
};

/// Per-signal |B| x |B| transition matrices M_h(b, b'). Construction checks
/// shapes only; stochasticity is reported by validate_model.
class BehaviorModel {
public:
    BehaviorModel(std::size_t num_behaviors, std::vector<Matrix> matrices);

    std::size_t num_behaviors() const noexcept { return num_behaviors_; }
    std::size_t num_signals() const noexcept { return matrices_.size(); }

    const Matrix& matrix(SignalId h) const { return matrices_.at(h); }
    const std::vector<Matrix>& matrices() const noexcept { return matrices_; }
    double operator()(SignalId h, BehaviorId from, BehaviorId to) const {
        return matrices_[h](static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to));
    }

    /// All matrices set to the uniform row 1/|B|.
    static BehaviorModel uniform(std::size_t num_behaviors, std::size_t num_signals);

private:
    std::size_t num_behaviors_;
    std::vector<Matrix> matrices_;
};

struct ModelViolation {
    enum class Kind { row_sum, negative_entry, non_finite };
    Kind kind;
    SignalId signal;
    BehaviorId row;
    std::optional<BehaviorId> col;
    double value;

    std::string describe() const;
};

std::vector<ModelViolation> validate_model(const BehaviorModel& model,
                                           double tol = kStochasticTol);

/// Throws InputError naming the first violation, if any.
void require_valid(const BehaviorModel& model);

/// Mechanism parameters. Ordering is lexicographic on params, which is also the
/// tie-break order used by mechanism search.
struct Mechanism {
    std::vector<double> params;

    auto operator<=>(const Mechanism&) const = default;
    bool operator==(const Mechanism&) const = default;

    std::string key() const;
};

using MechanismDistance = std::function<double(const Mechanism&, const Mechanism&)>;

/// Sup-norm distance on parameter vectors.
double sup_distance(const Mechanism& a, const Mechanism& b);

struct MechanismSpace {
    std::vector<Mechanism> members;
    MechanismDistance distance = sup_distance;

    std::size_t size() const noexcept { return members.size(); }
    double diameter() const;
};

/// Cartesian product of per-coordinate grids, first coordinate most significant.
MechanismSpace product_space(const std::vector<std::vector<double>>& grids);

struct LossFunction {
    double bound = 1.0;  // K: every value lies in [-K, 0]
    std::function<double(const Mechanism&, BehaviorId, const UserSample&)> eval;
};

struct SignalFunction {
    std::function<SignalId(const Mechanism&, BehaviorId, const UserSample&)> eval;
};

/// Everything a simulation needs besides the behavior model and mechanism.
struct Environment {
    BehaviorSpace behaviors;
    SignalSpace signals;
    UserDistribution users;
    SignalFunction signal;
    LossFunction loss;
};

struct TrajectoryRecord {
    BehaviorId behavior;
    SignalId signal;
    UserSample user;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    Mechanism mechanism;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return records.size(); }
};

}  // namespace gtml
