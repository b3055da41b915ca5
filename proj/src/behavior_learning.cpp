#include "gtml/behavior_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "gtml/errors.hpp"
#include "gtml/random.hpp"

namespace gtml {

TransitionCounts::TransitionCounts(std::size_t num_behaviors, std::size_t num_signals)
    : nb_(num_behaviors),
      nh_(num_signals),
      counts_(num_behaviors * num_behaviors * num_signals, 0),
      totals_(num_behaviors * num_signals, 0) {}

void TransitionCounts::add(SignalId h, BehaviorId from, BehaviorId to) {
    if (h >= nh_ || from >= nb_ || to >= nb_) throw InputError("transition outside the spaces");
    ++counts_[(h * nb_ + from) * nb_ + to];
    ++totals_[h * nb_ + from];
    ++total_;
}

TransitionCounts TransitionCounts::from(const Trajectory& traj, std::size_t num_behaviors,
                                        std::size_t num_signals) {
    TransitionCounts counts(num_behaviors, num_signals);
    for (std::size_t t = 0; t + 1 < traj.records.size(); ++t) {
        const auto& r = traj.records[t];
        counts.add(r.signal, r.behavior, traj.records[t + 1].behavior);
    }
    return counts;
}

std::pair<BehaviorModel, FitReport> fit_nonparametric(const Trajectory& traj,
                                                      std::size_t num_behaviors,
                                                      std::size_t num_signals,
                                                      FallbackPolicy fallback) {
    if (traj.size() < 2) throw InputError("non-parametric fit needs a trajectory of length >= 2");
    const auto counts = TransitionCounts::from(traj, num_behaviors, num_signals);
    const auto n = static_cast<Eigen::Index>(num_behaviors);
    FitReport report;
    std::vector<Matrix> ms(num_signals, Matrix::Zero(n, n));
    for (SignalId h = 0; h < num_signals; ++h) {
        for (BehaviorId b = 0; b < num_behaviors; ++b) {
            const std::uint64_t denom = counts.row_total(h, b);
            auto row = ms[h].row(static_cast<Eigen::Index>(b));
            if (denom == 0) {
                switch (fallback) {
                    case FallbackPolicy::uniform:
                        row.setConstant(1.0 / static_cast<double>(num_behaviors));
                        break;
                }
                report.fallback_cells.emplace_back(h, b);
                continue;
            }
            for (BehaviorId c = 0; c < num_behaviors; ++c) {
                row(static_cast<Eigen::Index>(c)) =
                    static_cast<double>(counts.count(h, b, c)) / static_cast<double>(denom);
            }
            const double sum = row.sum();
            if (std::abs(sum - 1.0) > kStochasticTol) {
                row /= sum;
                report.renormalized = true;
            }
        }
    }
    report.iterations = 1;
    return {BehaviorModel(num_behaviors, std::move(ms)), std::move(report)};
}

ParametricFamily::ParametricFamily(const BehaviorSpace& behaviors, const SignalSpace& signals,
                                   ParametricFeatures features)
    : features_(features), num_signals_(signals.size()) {
    if (behaviors.embedding_dim() != 1) {
        throw InputError("parametric behavior model needs scalar behavior embeddings");
    }
    const std::size_t db = features_.behavior ? behaviors.embedding_dim() : 0;
    const std::size_t dh = features_.signal ? signals.embedding_dim() : 0;
    dim_ = db + dh + (features_.bias ? 1 : 0);
    if (dim_ == 0) throw InputError("parametric model needs at least one feature block");

    const std::size_t nb = behaviors.size();
    targets_.resize(nb);
    for (BehaviorId b = 0; b < nb; ++b) targets_[b] = behaviors.embedding(b)[0];
    regressors_.resize(num_signals_ * nb * dim_);
    for (SignalId h = 0; h < num_signals_; ++h) {
        for (BehaviorId b = 0; b < nb; ++b) {
            double* x = regressors_.data() + (h * nb + b) * dim_;
            std::size_t k = 0;
            if (features_.behavior) {
                for (double v : behaviors.embedding(b)) x[k++] = v;
            }
            if (features_.signal) {
                for (double v : signals.embedding(h)) x[k++] = v;
            }
            if (features_.bias) x[k++] = 1.0;
        }
    }
}

void ParametricFamily::row(double mu, std::span<double> out) const {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < targets_.size(); ++c) {
        const double d = targets_[c] - mu;
        out[c] = -d * d;
        top = std::max(top, out[c]);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < targets_.size(); ++c) {
        out[c] = std::exp(out[c] - top);
        total += out[c];
    }
    for (std::size_t c = 0; c < targets_.size(); ++c) out[c] /= total;
}

BehaviorModel ParametricFamily::materialize(std::span<const double> w) const {
    if (w.size() != dim_) throw InputError("weight vector has the wrong dimension");
    const std::size_t nb = targets_.size();
    const auto n = static_cast<Eigen::Index>(nb);
    std::vector<Matrix> ms(num_signals_, Matrix(n, n));
    std::vector<double> buf(nb);
    for (SignalId h = 0; h < num_signals_; ++h) {
        for (BehaviorId b = 0; b < nb; ++b) {
            const auto x = regressor(b, h);
            double mu = 0.0;
            for (std::size_t k = 0; k < dim_; ++k) mu += w[k] * x[k];
            row(mu, buf);
            for (BehaviorId c = 0; c < nb; ++c) {
                ms[h](static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c)) = buf[c];
            }
        }
    }
    return BehaviorModel(nb, std::move(ms));
}

double ParametricFamily::log_likelihood(const TransitionCounts& counts, std::span<const double> w,
                                        std::vector<double>* grad) const {
    const std::size_t nb = targets_.size();
    if (counts.num_behaviors() != nb || counts.num_signals() != num_signals_) {
        throw InputError("transition counts do not match the parametric family");
    }
    if (grad) grad->assign(dim_, 0.0);
    if (counts.total() == 0) return 0.0;
    std::vector<double> z(nb);
    double ll = 0.0;
    for (SignalId h = 0; h < num_signals_; ++h) {
        for (BehaviorId b = 0; b < nb; ++b) {
            const std::uint64_t total = counts.row_total(h, b);
            if (total == 0) continue;
            const auto x = regressor(b, h);
            double mu = 0.0;
            for (std::size_t k = 0; k < dim_; ++k) mu += w[k] * x[k];
            double top = -std::numeric_limits<double>::infinity();
            for (BehaviorId c = 0; c < nb; ++c) {
                const double d = targets_[c] - mu;
                z[c] = -d * d;
                top = std::max(top, z[c]);
            }
            double sum = 0.0;
            double mean_target = 0.0;
            for (BehaviorId c = 0; c < nb; ++c) {
                const double e = std::exp(z[c] - top);
                sum += e;
                mean_target += e * targets_[c];
            }
            mean_target /= sum;
            const double lse = top + std::log(sum);
            double dmu = 0.0;
            for (BehaviorId c = 0; c < nb; ++c) {
                const auto n = static_cast<double>(counts.count(h, b, c));
                if (n == 0.0) continue;
                ll += n * (z[c] - lse);
                dmu += 2.0 * n * (targets_[c] - mean_target);
            }
            if (grad) {
                for (std::size_t k = 0; k < dim_; ++k) (*grad)[k] += dmu * x[k];
            }
        }
    }
    const auto total = static_cast<double>(counts.total());
    if (grad) {
        for (auto& g : *grad) g /= total;
    }
    return ll / total;
}

BehaviorModel materialize(const ParametricBehaviorModel& pm) { return pm.family.materialize(pm.w); }

namespace {

struct AscentResult {
    std::vector<double> w;
    double value;
    FitReport report;
};

double clip(double v, double bound) { return std::clamp(v, -bound, bound); }

AscentResult projected_ascent(const ParametricFamily& family, const TransitionCounts& counts,
                              std::vector<double> w, const MleOptions& options) {
    const std::size_t d = w.size();
    for (auto& v : w) v = clip(v, options.bound);
    std::vector<double> g;
    std::vector<double> g_next;
    std::vector<double> w_next(d);
    double f = family.log_likelihood(counts, w, &g);
    FitReport report;
    report.log_likelihood.push_back(f);
    report.converged = false;
    double step = 1.0;
    std::size_t it = 0;
    for (; it < options.max_iters; ++it) {
        double pg = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            pg = std::max(pg, std::abs(clip(w[k] + g[k], options.bound) - w[k]));
        }
        report.gradient_norm = pg;
        if (pg <= options.tolerance) {
            report.converged = true;
            break;
        }
        bool accepted = false;
        double f_next = f;
        while (step > 1e-20) {
            double ascent = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                w_next[k] = clip(w[k] + step * g[k], options.bound);
                ascent += g[k] * (w_next[k] - w[k]);
            }
            f_next = family.log_likelihood(counts, w_next, &g_next);
            // Near the optimum f is flat up to summation noise while the
            // gradient stays accurate: there, accept any step that does not
            // overshoot the maximum along the step direction.
            double slope_next = 0.0;
            for (std::size_t k = 0; k < d; ++k) slope_next += g_next[k] * (w_next[k] - w[k]);
            const double noise = 1e-12 * (1.0 + std::abs(f));
            const bool sufficient = f_next >= f + 1e-4 * ascent;
            const bool flat = f_next >= f - noise && ascent <= noise;
            if ((sufficient || flat) && slope_next >= -0.9 * ascent) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            report.diagnostic = "line search could not make progress";
            break;
        }
        w.swap(w_next);
        g.swap(g_next);
        f = f_next;
        report.log_likelihood.push_back(f);
        step = std::min(step * 2.0, 1e6);
    }
    report.iterations = it;
    if (!report.converged && report.diagnostic.empty()) {
        report.diagnostic = "iteration limit reached with projected gradient " +
                            std::to_string(report.gradient_norm);
    }
    return {std::move(w), f, std::move(report)};
}

}  // namespace

std::pair<ParametricBehaviorModel, FitReport> fit_parametric(const TransitionCounts& counts,
                                                             const ParametricFamily& family,
                                                             const MleOptions& options) {
    if (counts.total() == 0) throw InputError("parametric fit needs at least one transition");
    if (!(options.bound >= 0.0)) throw InputError("weight bound W must be non-negative");
    if (options.restarts < 1) throw InputError("parametric fit needs at least one start");
    Rng rng(options.seed);
    std::optional<AscentResult> best;
    for (std::size_t r = 0; r < options.restarts; ++r) {
        std::vector<double> start(family.dim());
        for (auto& v : start) v = options.bound * (2.0 * uniform01(rng) - 1.0);
        auto result = projected_ascent(family, counts, std::move(start), options);
        if (!best || result.value > best->value) best = std::move(result);
    }
    ParametricBehaviorModel pm{family, std::move(best->w), options.bound};
    return {std::move(pm), std::move(best->report)};
}

std::pair<ParametricBehaviorModel, FitReport> fit_parametric(const Trajectory& traj,
                                                             const ParametricFamily& family,
                                                             const MleOptions& options) {
    if (traj.size() < 2) throw InputError("parametric fit needs a trajectory of length >= 2");
    return fit_parametric(TransitionCounts::from(traj, family.num_behaviors(), family.num_signals()),
                          family, options);
}

}  // namespace gtml
