#include "gtml/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gtml/errors.hpp"

namespace gtml {

std::vector<std::vector<double>> index_embeddings(std::size_t n) {
    std::vector<std::vector<double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = {n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0};
    }
    return out;
}

LabelSet::LabelSet(std::vector<std::string> labels, std::vector<std::vector<double>> embeddings,
                   std::size_t min_size, const char* what)
    : labels_(std::move(labels)), embeddings_(std::move(embeddings)) {
    if (labels_.size() < min_size) {
        throw InputError(std::string(what) + " needs at least " + std::to_string(min_size) +
                         " elements");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (!index_.emplace(labels_[i], i).second) {
            throw InputError(std::string(what) + ": duplicate label '" + labels_[i] + "'");
        }
    }
    if (embeddings_.empty()) embeddings_ = index_embeddings(labels_.size());
    if (embeddings_.size() != labels_.size()) {
        throw InputError(std::string(what) + ": embedding count does not match label count");
    }
    const std::size_t dim = embeddings_.front().size();
    for (const auto& e : embeddings_) {
        if (e.empty() || e.size() != dim) {
            throw InputError(std::string(what) + ": embeddings must share one non-zero dimension");
        }
    }
}

std::size_t LabelSet::index_of(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) throw InputError("unknown label '" + label + "'");
    return it->second;
}

UserDistribution::UserDistribution(std::vector<QuerySpec> queries) : queries_(std::move(queries)) {
    if (queries_.empty()) throw InputError("user distribution needs at least one query");
    double total = 0.0;
    for (const auto& q : queries_) {
        if (!(q.prob >= 0.0)) throw InputError("query '" + q.label + "' has negative probability");
        for (double c : q.click_probs) {
            if (!(c >= 0.0 && c <= 1.0)) {
                throw InputError("query '" + q.label + "' has click probability outside [0,1]");
            }
        }
        total += q.prob;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw InputError("query probabilities sum to " + std::to_string(total) + ", not 1");
    }
    for (std::size_t q = 0; q < queries_.size(); ++q) {
        const auto& c = queries_[q].click_probs;
        for (std::uint8_t c1 = 0; c1 < 2; ++c1) {
            for (std::uint8_t c2 = 0; c2 < 2; ++c2) {
                const double p = queries_[q].prob * (c1 ? c[0] : 1.0 - c[0]) *
                                 (c2 ? c[1] : 1.0 - c[1]);
                support_.push_back({UserSample{q, {c1, c2}}, p});
            }
        }
    }
    double acc = 0.0;
    cumulative_.reserve(support_.size());
    for (const auto& atom : support_) {
        acc += atom.prob;
        cumulative_.push_back(acc);
    }
}

std::size_t UserDistribution::sample_index(Rng& rng) const {
    const double u = uniform01(rng) * cumulative_.back();
    // u < cumulative_.back(), and zero-width atoms are never the first element > u.
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<std::size_t>(it - cumulative_.begin());
}

BehaviorModel::BehaviorModel(std::size_t num_behaviors, std::vector<Matrix> matrices)
    : num_behaviors_(num_behaviors), matrices_(std::move(matrices)) {
    if (num_behaviors_ < 2) throw InputError("behavior model needs |B| >= 2");
    if (matrices_.empty()) throw InputError("behavior model needs one matrix per signal");
    const auto n = static_cast<Eigen::Index>(num_behaviors_);
    for (const auto& m : matrices_) {
        if (m.rows() != n || m.cols() != n) {
            throw InputError("behavior model matrix is not |B| x |B|");
        }
    }
}

BehaviorModel BehaviorModel::uniform(std::size_t num_behaviors, std::size_t num_signals) {
    const auto n = static_cast<Eigen::Index>(num_behaviors);
    std::vector<Matrix> ms(num_signals, Matrix::Constant(n, n, 1.0 / static_cast<double>(n)));
    return BehaviorModel(num_behaviors, std::move(ms));
}

std::string ModelViolation::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::row_sum: os << "row sum " << value; break;
        case Kind::negative_entry: os << "negative entry " << value; break;
        case Kind::non_finite: os << "non-finite entry"; break;
    }
    os << " at signal " << signal << ", row " << row;
    if (col) os << ", col " << *col;
    return os.str();
}

std::vector<ModelViolation> validate_model(const BehaviorModel& model, double tol) {
    std::vector<ModelViolation> out;
    const auto n = static_cast<Eigen::Index>(model.num_behaviors());
    for (SignalId h = 0; h < model.num_signals(); ++h) {
        const Matrix& m = model.matrix(h);
        for (Eigen::Index b = 0; b < n; ++b) {
            double sum = 0.0;
            for (Eigen::Index c = 0; c < n; ++c) {
                const double v = m(b, c);
                if (!std::isfinite(v)) {
                    out.push_back({ModelViolation::Kind::non_finite, h, static_cast<BehaviorId>(b),
                                   static_cast<BehaviorId>(c), v});
                } else if (v < 0.0) {
                    out.push_back({ModelViolation::Kind::negative_entry, h,
                                   static_cast<BehaviorId>(b), static_cast<BehaviorId>(c), v});
                }
                sum += v;
            }
            if (std::isfinite(sum) && std::abs(sum - 1.0) > tol) {
                out.push_back({ModelViolation::Kind::row_sum, h, static_cast<BehaviorId>(b),
                               std::nullopt, sum});
            }
        }
    }
    return out;
}

void require_valid(const BehaviorModel& model) {
    auto v = validate_model(model);
    if (!v.empty()) throw InputError("invalid behavior model: " + v.front().describe());
}

std::string Mechanism::key() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) os << ';';
        os << params[i];
    }
    return os.str();
}

double sup_distance(const Mechanism& a, const Mechanism& b) {
    if (a.params.size() != b.params.size()) {
        throw InputError("mechanisms have different parameter counts");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < a.params.size(); ++i) {
        d = std::max(d, std::abs(a.params[i] - b.params[i]));
    }
    return d;
}

double MechanismSpace::diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            d = std::max(d, distance(members[i], members[j]));
        }
    }
    return d;
}

MechanismSpace product_space(const std::vector<std::vector<double>>& grids) {
    MechanismSpace space;
    if (grids.empty()) return space;
    for (const auto& g : grids) {
        if (g.empty()) return space;
    }
    std::vector<std::size_t> idx(grids.size(), 0);
    while (true) {
        Mechanism m;
        m.params.reserve(grids.size());
        for (std::size_t k = 0; k < grids.size(); ++k) m.params.push_back(grids[k][idx[k]]);
        space.members.push_back(std::move(m));
        std::size_t k = grids.size();
        while (k > 0) {
            --k;
            if (++idx[k] < grids[k].size()) break;
            idx[k] = 0;
            if (k == 0) return space;
        }
    }
}

}  // namespace gtml
