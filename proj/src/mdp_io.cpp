#include "avgrl/mdp_io.hpp"

#include <fstream>
#include <sstream>

#include "avgrl/errors.hpp"

namespace avgrl {

using nlohmann::json;

namespace {

const json& require(const json& doc, const char* key) {
  if (!doc.is_object()) throw ValidationError("MDP document must be a JSON object");
  auto it = doc.find(key);
  if (it == doc.end()) throw ValidationError(std::string("missing field '") + key + "'");
  return *it;
}

int positive_int(const json& doc, const char* key) {
  const json& v = require(doc, key);
  if (!v.is_number_integer() || v.get<long long>() <= 0)
    throw ValidationError(std::string("field '") + key + "' must be a positive integer");
  return v.get<int>();
}

double number_at(const json& v, const std::string& where) {
  if (!v.is_number()) throw ValidationError(where + " must be a number");
  return v.get<double>();
}

const json& array_at(const json& v, std::size_t expected, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + " must be an array");
  if (v.size() != expected)
    throw ValidationError(where + " has " + std::to_string(v.size()) + " entries, expected " +
                          std::to_string(expected));
  return v;
}

// 1-based line of a byte offset, for parse error messages.
std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

json mdp_to_json(const TabularMDP& mdp) {
  const int ns = mdp.n_states();
  const int na = mdp.n_actions();
  json transition = json::array();
  json reward = json::array();
  for (int s = 0; s < ns; ++s) {
    json per_action = json::array();
    json r_row = json::array();
    for (int a = 0; a < na; ++a) {
      json row = json::array();
      for (int next = 0; next < ns; ++next) row.push_back(mdp.transition(s, a, next));
      per_action.push_back(std::move(row));
      r_row.push_back(mdp.reward(s, a));
    }
    transition.push_back(std::move(per_action));
    reward.push_back(std::move(r_row));
  }
  json initial = json::array();
  for (int s = 0; s < ns; ++s) initial.push_back(mdp.initial_dist()(s));
  return json{{"n_states", ns},         {"n_actions", na},          {"transition", transition},
              {"reward", reward},       {"initial_dist", initial}, {"r_max", mdp.r_max()}};
}

TabularMDP mdp_from_json(const json& doc) {
  const int ns = positive_int(doc, "n_states");
  const int na = positive_int(doc, "n_actions");
  const double r_max = number_at(require(doc, "r_max"), "r_max");

  const json& t = array_at(require(doc, "transition"), ns, "transition");
  RowMatrix transition(static_cast<Eigen::Index>(ns) * na, ns);
  for (int s = 0; s < ns; ++s) {
    const std::string ws = "transition[" + std::to_string(s) + "]";
    const json& per_action = array_at(t[s], na, ws);
    for (int a = 0; a < na; ++a) {
      const std::string wa = ws + "[" + std::to_string(a) + "]";
      const json& row = array_at(per_action[a], ns, wa);
      for (int next = 0; next < ns; ++next)
        transition(static_cast<Eigen::Index>(s) * na + a, next) =
            number_at(row[next], wa + "[" + std::to_string(next) + "]");
    }
  }

  const json& r = array_at(require(doc, "reward"), ns, "reward");
  Matrix reward(ns, na);
  for (int s = 0; s < ns; ++s) {
    const std::string ws = "reward[" + std::to_string(s) + "]";
    const json& row = array_at(r[s], na, ws);
    for (int a = 0; a < na; ++a) reward(s, a) = number_at(row[a], ws + "[" + std::to_string(a) + "]");
  }

  const json& rho = array_at(require(doc, "initial_dist"), ns, "initial_dist");
  Vector initial(ns);
  for (int s = 0; s < ns; ++s)
    initial(s) = number_at(rho[s], "initial_dist[" + std::to_string(s) + "]");

  return TabularMDP(ns, na, std::move(transition), std::move(reward), std::move(initial), r_max);
}

TabularMDP parse_mdp(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  return mdp_from_json(doc);
}

TabularMDP load_mdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_mdp(buffer.str());
}

void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << mdp_to_json(mdp).dump(2) << '\n';
}

}  // namespace avgrl
