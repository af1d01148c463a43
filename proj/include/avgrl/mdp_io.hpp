#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "avgrl/mdp.hpp"

namespace avgrl {

// JSON document:
//   {"n_states": S, "n_actions": A,
//    "transition": [[[P(s'|s,a) for s'] for a] for s],
//    "reward": [[r(s,a) for a] for s],
//    "initial_dist": [rho(s) for s], "r_max": R}
// Loading validates every TabularMDP invariant; failures throw
// ValidationError whose message names the JSON location or (s, a) pair.

nlohmann::json mdp_to_json(const TabularMDP& mdp);
TabularMDP mdp_from_json(const nlohmann::json& doc);

TabularMDP parse_mdp(const std::string& text);
TabularMDP load_mdp(const std::filesystem::path& path);
void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path);

}  // namespace avgrl
