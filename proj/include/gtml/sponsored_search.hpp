#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gtml/core.hpp"

namespace gtml::gsp {

/// Highest three bids, b(1) >= b(2) >= b(3); absent advertisers bid 0.
using TopBids = std::array<double, 3>;

using Clicks = std::array<std::uint8_t, kSlots>;

struct BidProfile {
    std::vector<double> bids;  // per advertiser
    TopBids top{};

    static BidProfile from_bids(std::vector<double> bids);
};

/// Two-slot GSP revenue with reserve r. An ad is shown when its bid is at
/// least r; slot i pays max(next bid, r) per click:
///   r c1                    if b(2) < r <= b(1)
///   b(2) c1 + r c2          if b(3) <= r <= b(2)
///   b(2) c1 + b(3) c2       if r < b(3)
///   0                       if r > b(1)
/// Throws InputError for a negative reserve.
double gsp_revenue(double reserve, const TopBids& top, const Clicks& clicks);

/// Number of ads shown (0, 1 or 2) at reserve r.
int shown_ads(double reserve, const TopBids& top);

inline constexpr std::size_t kNumSignals = 9;

/// Signal index for (ads shown, clicks on shown ads): shown * 3 + clicks.
/// Clicks on unshown slots are masked, so shown < clicks never occurs.
SignalId signal_index(int shown, int clicks);

/// Labels "s<shown>c<clicks>" in index order; s0c1, s0c2, s1c2 are never emitted.
std::vector<std::string> signal_labels();

struct AuctionSpec {
    std::size_t advertisers = 3;
    std::vector<double> bid_levels;
    std::vector<QuerySpec> queries;
    std::vector<double> reserve_grid;
};

/// GSP environment: behaviors are joint bid profiles on the bid grid,
/// enumerated with advertiser 0 as the most significant digit.
class Auction {
public:
    explicit Auction(AuctionSpec spec, std::vector<std::vector<double>> behavior_embeddings = {},
                     std::vector<std::vector<double>> signal_embeddings = {});

    const AuctionSpec& spec() const noexcept { return spec_; }
    const std::vector<BidProfile>& profiles() const noexcept { return profiles_; }
    double max_bid() const noexcept { return max_bid_; }
    double loss_bound() const noexcept { return 2.0 * max_bid_; }

    /// Behavior labels such as "3_1_1" (bids joined by '_').
    std::vector<std::string> behavior_labels() const;

    const Environment& environment() const noexcept { return env_; }

    /// Reserve grid on every query, first query most significant.
    MechanismSpace mechanism_space() const;
    MechanismSpace mechanism_space(const std::vector<double>& reserve_grid) const;

    /// Throws InputError when the mechanism does not price every query or a
    /// reserve lies outside [0, max bid].
    void check_mechanism(const Mechanism& a) const;

    double revenue(const Mechanism& a, BehaviorId b, const UserSample& u) const;
    double loss(const Mechanism& a, BehaviorId b, const UserSample& u) const {
        return -revenue(a, b, u);
    }
    SignalId signal(const Mechanism& a, BehaviorId b, const UserSample& u) const;

private:
    AuctionSpec spec_;
    std::vector<BidProfile> profiles_;
    double max_bid_ = 0.0;
    Environment env_;
};

struct TrueModelSpec {
    std::size_t num_behaviors = 8;
    std::size_t num_signals = kNumSignals;
    double floor = 0.01;          // rho: every entry >= rho
    double concentration = 1.0;   // Dirichlet parameter of the random part
    bool signal_independent = false;
};

/// Random model with rows rho + (1 - rho |B|) * Dirichlet(concentration).
/// Throws InputError when rho |B| > 1.
BehaviorModel make_true_model(const TrueModelSpec& spec, std::uint64_t seed);

}  // namespace gtml::gsp
