// Small environments shared by the unit tests.
#pragma once

#include "gtml/sponsored_search.hpp"

namespace fixture {

inline gtml::gsp::AuctionSpec two_query_spec(std::size_t advertisers = 3) {
    gtml::gsp::AuctionSpec spec;
    spec.advertisers = advertisers;
    spec.bid_levels = {0.5, 2.0};
    spec.queries = {{"q1", 0.6, {0.5, 0.3}}, {"q2", 0.4, {0.4, 0.2}}};
    spec.reserve_grid = {0.0, 0.4, 0.8, 1.2, 1.6, 2.0};
    return spec;
}

inline gtml::gsp::AuctionSpec single_query_spec(std::size_t advertisers, std::vector<double> grid) {
    gtml::gsp::AuctionSpec spec;
    spec.advertisers = advertisers;
    spec.bid_levels = {0.5, 2.0};
    spec.queries = {{"q", 1.0, {0.5, 0.3}}};
    spec.reserve_grid = std::move(grid);
    return spec;
}

inline gtml::BehaviorModel random_model(std::size_t nb, std::uint64_t seed, double floor = 0.01,
                                        bool signal_independent = false) {
    gtml::gsp::TrueModelSpec s;
    s.num_behaviors = nb;
    s.floor = floor;
    s.signal_independent = signal_independent;
    return gtml::gsp::make_true_model(s, seed);
}

}  // namespace fixture
