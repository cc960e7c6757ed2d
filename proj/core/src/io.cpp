#include "envpoison/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <sstream>

namespace envpoison {

namespace {

Json matrix_to_json(const Matrix& m) {
  Json out = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    out.push_back(Json(std::vector<double>(row.begin(), row.end())));
  }
  return out;
}

Json transitions_to_json(const Mdp& m) {
  Json out = Json::array();
  for (std::size_t s = 0; s < m.n_states; ++s) {
    Json per_action = Json::array();
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      auto row = m.row(s, a);
      per_action.push_back(Json(std::vector<double>(row.begin(), row.end())));
    }
    out.push_back(std::move(per_action));
  }
  return out;
}

template <typename T>
T get_field(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::kConfiguration, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("field '") + key + "': " + e.what());
  }
}

void fill_rewards(Mdp& m, const Json& j) {
  const auto rows = get_field<std::vector<std::vector<double>>>(j, "rewards");
  if (rows.size() != m.n_states) throw Error(ErrorCode::kShapeMismatch, "rewards has wrong row count");
  for (std::size_t s = 0; s < m.n_states; ++s) {
    if (rows[s].size() != m.n_actions) throw Error(ErrorCode::kShapeMismatch, "rewards row has wrong length");
    for (std::size_t a = 0; a < m.n_actions; ++a) m.rewards(s, a) = rows[s][a];
  }
}

void fill_transitions(Mdp& m, const Json& j, const char* key) {
  const auto t = get_field<std::vector<std::vector<std::vector<double>>>>(j, key);
  if (t.size() != m.n_states) throw Error(ErrorCode::kShapeMismatch, "transitions has wrong state count");
  for (std::size_t s = 0; s < m.n_states; ++s) {
    if (t[s].size() != m.n_actions) throw Error(ErrorCode::kShapeMismatch, "transitions has wrong action count");
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      if (t[s][a].size() != m.n_states) throw Error(ErrorCode::kShapeMismatch, "transition row has wrong length");
      std::copy(t[s][a].begin(), t[s][a].end(), m.row(s, a).begin());
    }
  }
}

}  // namespace

Json mdp_to_json(const Mdp& m, const Policy* target) {
  Json j;
  j["n_states"] = m.n_states;
  j["n_actions"] = m.n_actions;
  j["gamma"] = m.gamma;
  j["d0"] = m.initial_dist;
  j["rewards"] = matrix_to_json(m.rewards);
  j["transitions"] = transitions_to_json(m);
  if (target) j["target_policy"] = target->actions();
  return j;
}

Mdp mdp_from_json(const Json& j) {
  const auto n = get_field<std::size_t>(j, "n_states");
  const auto na = get_field<std::size_t>(j, "n_actions");
  const double gamma = j.contains("gamma") ? get_field<double>(j, "gamma") : 1.0;
  Mdp m(n, na, gamma);
  if (j.contains("d0")) {
    m.initial_dist = get_field<std::vector<double>>(j, "d0");
    if (m.initial_dist.size() != n) throw Error(ErrorCode::kShapeMismatch, "d0 has wrong length");
  }
  fill_rewards(m, j);
  fill_transitions(m, j, "transitions");
  return m;
}

Policy policy_from_json(const Json& j) {
  if (j.is_array()) return Policy(j.get<std::vector<std::size_t>>());
  if (j.is_object() && j.contains("target_policy")) {
    return Policy(get_field<std::vector<std::size_t>>(j, "target_policy"));
  }
  if (j.is_object() && j.contains("policy")) return Policy(get_field<std::vector<std::size_t>>(j, "policy"));
  throw Error(ErrorCode::kConfiguration, "no policy found (expected an array or 'target_policy')");
}

Json policy_to_json(const Policy& pi) { return Json(pi.actions()); }

Json solution_to_json(const AttackSolution& sol) {
  Json j;
  j["feasible"] = sol.feasible;
  j["cost"] = std::isfinite(sol.cost) ? Json(sol.cost) : Json(nullptr);
  j["verified_margin"] = std::isfinite(sol.verified_margin) ? Json(sol.verified_margin) : Json(nullptr);
  j["rewards_hat"] = matrix_to_json(sol.poisoned.rewards);
  j["transitions_hat"] = transitions_to_json(sol.poisoned);
  j["per_pair_cost"] = matrix_to_json(sol.per_pair_cost);
  if (!sol.diagnostic.empty()) j["diagnostic"] = sol.diagnostic;
  return j;
}

Mdp poisoned_from_json(const Json& j, const Mdp& original) {
  Mdp m = original;
  Json tmp;
  tmp["rewards"] = get_field<Json>(j, "rewards_hat");
  fill_rewards(m, tmp);
  fill_transitions(m, j, "transitions_hat");
  return m;
}

Json batch_to_json(const BatchResult& batch) {
  Json out = Json::array();
  for (const auto& p : batch.points) {
    out.push_back({{"t", p.t},
                   {"avg_miss_mean", p.avg_miss_mean},
                   {"avg_miss_sem", p.avg_miss_sem},
                   {"avg_cost_mean", p.avg_cost_mean},
                   {"avg_cost_sem", p.avg_cost_sem}});
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_trace_csv(std::ostream& out, const SimTrace& trace) {
  out << "t,state,action,matched,step_cost,reward,avg_miss,avg_cost\n";
  MetricsAccumulator acc;
  acc.p_norm = trace.metrics.p_norm;
  for (const auto& r : trace.records) {
    ++acc.t;
    if (!r.matched) ++acc.mismatch_count;
    if (std::isinf(acc.p_norm)) acc.cost_power_sum = std::max(acc.cost_power_sum, r.step_cost);
    else if (acc.p_norm == 1.0) acc.cost_power_sum += r.step_cost;
    else acc.cost_power_sum += std::pow(r.step_cost, acc.p_norm);
    out << r.t << ',' << r.state << ',' << r.action << ',' << (r.matched ? 1 : 0) << ','
        << format_number(r.step_cost) << ',' << format_number(r.reward) << ','
        << format_number(acc.avg_miss()) << ',' << format_number(acc.avg_cost()) << '\n';
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfiguration, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, "cannot parse '" + path + "': " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kConfiguration, "cannot write '" + path + "'");
  out << text;
}

}  // namespace envpoison
