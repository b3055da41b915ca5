// A reduced copy of the shipped default config for fast end-to-end tests.
#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fixture {

inline nlohmann::json default_config_json() {
    std::ifstream in(std::string(GTML_SOURCE_DIR) + "/configs/default.json");
    std::stringstream ss;
    ss << in.rdbuf();
    return nlohmann::json::parse(ss.str());
}

inline nlohmann::json small_config_json() {
    auto j = default_config_json();
    j["replications"] = 3;
    j["simulation"]["length"] = 200;
    j["behavior_learning"]["T1"] = {200, 400};
    j["mechanism_learning"]["T2"] = {50, 100};
    j["ablation"]["grid_sizes"] = {1, 5};
    j["ablation"]["T2"] = 100;
    j["ablation"]["replications"] = 3;
    j["end_to_end"]["sweep"] = {{300, 50}, {600, 100}};
    j["bounds"]["T1"] = {1e3, 1e5};
    j["bounds"]["T2"] = {1e3, 1e5};
    j["bounds"]["tail_replications"] = 2;
    j["bounds"]["n_perturbations"] = 3;
    return j;
}

}  // namespace fixture
