#include "gtml/sponsored_search.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <sstream>

#include "gtml/errors.hpp"
#include "gtml/random.hpp"

namespace gtml::gsp {

BidProfile BidProfile::from_bids(std::vector<double> bids) {
    BidProfile p;
    p.bids = std::move(bids);
    std::vector<double> sorted = p.bids;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    for (std::size_t i = 0; i < 3; ++i) p.top[i] = i < sorted.size() ? sorted[i] : 0.0;
    return p;
}

double gsp_revenue(double reserve, const TopBids& top, const Clicks& clicks) {
    if (!(reserve >= 0.0)) throw InputError("reserve price must be non-negative");
    const double c1 = clicks[0];
    const double c2 = clicks[1];
    if (reserve > top[0]) return 0.0;
    if (reserve > top[1]) return reserve * c1;
    if (reserve >= top[2]) return top[1] * c1 + reserve * c2;
    return top[1] * c1 + top[2] * c2;
}

int shown_ads(double reserve, const TopBids& top) {
    return (top[0] >= reserve ? 1 : 0) + (top[1] >= reserve ? 1 : 0);
}

SignalId signal_index(int shown, int clicks) {
    shown = std::clamp(shown, 0, 2);
    clicks = std::clamp(clicks, 0, shown);
    return static_cast<SignalId>(shown * 3 + clicks);
}

std::vector<std::string> signal_labels() {
    std::vector<std::string> out;
    for (int s = 0; s < 3; ++s) {
        for (int c = 0; c < 3; ++c) out.push_back("s" + std::to_string(s) + "c" + std::to_string(c));
    }
    return out;
}

namespace {

std::string format_bid(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::vector<BidProfile> enumerate_profiles(std::size_t advertisers,
                                           const std::vector<double>& levels) {
    std::vector<BidProfile> out;
    std::vector<std::size_t> idx(advertisers, 0);
    while (true) {
        std::vector<double> bids(advertisers);
        for (std::size_t i = 0; i < advertisers; ++i) bids[i] = levels[idx[i]];
        out.push_back(BidProfile::from_bids(std::move(bids)));
        std::size_t k = advertisers;
        bool done = true;
        while (k > 0) {
            --k;
            if (++idx[k] < levels.size()) {
                done = false;
                break;
            }
            idx[k] = 0;
        }
        if (done) return out;
    }
}

std::vector<std::string> profile_labels(const std::vector<BidProfile>& profiles) {
    std::vector<std::string> labels;
    for (const auto& p : profiles) {
        std::string l;
        for (std::size_t i = 0; i < p.bids.size(); ++i) {
            if (i) l += '_';
            l += format_bid(p.bids[i]);
        }
        labels.push_back(std::move(l));
    }
    return labels;
}

const AuctionSpec& checked(const AuctionSpec& spec) {
    if (spec.advertisers < 1) throw InputError("auction needs at least one advertiser");
    if (spec.bid_levels.empty()) throw InputError("auction needs at least one bid level");
    for (double b : spec.bid_levels) {
        if (!(b >= 0.0)) throw InputError("bid levels must be non-negative");
    }
    return spec;
}

}  // namespace

Auction::Auction(AuctionSpec spec, std::vector<std::vector<double>> behavior_embeddings,
                 std::vector<std::vector<double>> signal_embeddings)
    : spec_(checked(spec)),
      profiles_(enumerate_profiles(spec_.advertisers, spec_.bid_levels)),
      max_bid_(*std::max_element(spec_.bid_levels.begin(), spec_.bid_levels.end())),
      env_{BehaviorSpace(profile_labels(profiles_), std::move(behavior_embeddings)),
           SignalSpace(signal_labels(), std::move(signal_embeddings)),
           UserDistribution(spec_.queries),
           {},
           {}} {
    for (double r : spec_.reserve_grid) {
        if (!(r >= 0.0 && r <= max_bid_)) {
            throw InputError("reserve grid values must lie in [0, max bid]");
        }
    }
    // The environment's callbacks capture a copy of the profile table so the
    // Environment stays valid independently of this object.
    auto tops = std::make_shared<std::vector<TopBids>>();
    for (const auto& p : profiles_) tops->push_back(p.top);
    const std::size_t num_queries = spec_.queries.size();
    const double max_bid = max_bid_;
    auto reserve_of = [num_queries, max_bid](const Mechanism& a, std::size_t q) {
        if (a.params.size() != num_queries) {
            throw InputError("mechanism does not define a reserve for every query");
        }
        const double r = a.params[q];
        if (!(r >= 0.0 && r <= max_bid)) throw InputError("reserve outside [0, max bid]");
        return r;
    };
    env_.loss.bound = loss_bound();
    env_.loss.eval = [tops, reserve_of](const Mechanism& a, BehaviorId b, const UserSample& u) {
        return -gsp_revenue(reserve_of(a, u.query), tops->at(b), u.clicks);
    };
    env_.signal.eval = [tops, reserve_of](const Mechanism& a, BehaviorId b, const UserSample& u) {
        const double r = reserve_of(a, u.query);
        const TopBids& top = tops->at(b);
        const int shown = shown_ads(r, top);
        int clicks = 0;
        if (shown >= 1) clicks += u.clicks[0];
        if (shown >= 2) clicks += u.clicks[1];
        return signal_index(shown, clicks);
    };
}

std::vector<std::string> Auction::behavior_labels() const { return profile_labels(profiles_); }

MechanismSpace Auction::mechanism_space() const { return mechanism_space(spec_.reserve_grid); }

MechanismSpace Auction::mechanism_space(const std::vector<double>& reserve_grid) const {
    for (double r : reserve_grid) {
        if (!(r >= 0.0 && r <= max_bid_)) throw InputError("reserve outside [0, max bid]");
    }
    return product_space(std::vector<std::vector<double>>(spec_.queries.size(), reserve_grid));
}

void Auction::check_mechanism(const Mechanism& a) const {
    if (a.params.size() != spec_.queries.size()) {
        throw InputError("mechanism does not define a reserve for every query");
    }
    for (double r : a.params) {
        if (!(r >= 0.0 && r <= max_bid_)) throw InputError("reserve outside [0, max bid]");
    }
}

double Auction::revenue(const Mechanism& a, BehaviorId b, const UserSample& u) const {
    return -env_.loss.eval(a, b, u);
}

SignalId Auction::signal(const Mechanism& a, BehaviorId b, const UserSample& u) const {
    return env_.signal.eval(a, b, u);
}

BehaviorModel make_true_model(const TrueModelSpec& spec, std::uint64_t seed) {
    const std::size_t n = spec.num_behaviors;
    if (n < 2) throw InputError("true model needs |B| >= 2");
    if (spec.num_signals < 1) throw InputError("true model needs |H| >= 1");
    if (!(spec.floor >= 0.0) || spec.floor * static_cast<double>(n) > 1.0 + 1e-15) {
        throw InputError("positivity floor rho must satisfy 0 <= rho |B| <= 1");
    }
    if (!(spec.concentration > 0.0)) throw InputError("Dirichlet concentration must be positive");
    const double free_mass = std::max(0.0, 1.0 - spec.floor * static_cast<double>(n));
    Rng rng(seed);
    std::gamma_distribution<double> gamma(spec.concentration, 1.0);
    const auto dim = static_cast<Eigen::Index>(n);

    auto random_matrix = [&]() {
        Matrix m(dim, dim);
        for (Eigen::Index b = 0; b < dim; ++b) {
            double total = 0.0;
            for (Eigen::Index c = 0; c < dim; ++c) {
                m(b, c) = gamma(rng);
                total += m(b, c);
            }
            for (Eigen::Index c = 0; c < dim; ++c) {
                m(b, c) = spec.floor + free_mass * (total > 0.0 ? m(b, c) / total : 1.0 / n);
            }
        }
        return m;
    };

    std::vector<Matrix> ms;
    if (spec.signal_independent) {
        ms.assign(spec.num_signals, random_matrix());
    } else {
        for (std::size_t h = 0; h < spec.num_signals; ++h) ms.push_back(random_matrix());
    }
    return BehaviorModel(n, std::move(ms));
}

}  // namespace gtml::gsp
