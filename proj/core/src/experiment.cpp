#include "envpoison/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "envpoison/online.hpp"
#include "envpoison/simulation.hpp"

namespace envpoison {

namespace {

double parse_norm(const Json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return kInf;
    throw Error(ErrorCode::kConfiguration, "p_norm must be a number or \"inf\"");
  }
  return v.get<double>();
}

std::string resolve(const std::string& base, const std::string& path) {
  if (base.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base) / path).string();
}

std::vector<double> parse_values(const Json& j) {
  if (j.contains("values")) return j.at("values").get<std::vector<double>>();
  const double start = j.at("start").get<double>();
  const double stop = j.at("stop").get<double>();
  const double step = j.at("step").get<double>();
  if (!(step > 0.0)) throw Error(ErrorCode::kConfiguration, "sweep step must be positive");
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) out.push_back(start + step * static_cast<double>(i));
  return out;
}

std::string header(const ExperimentSpec& spec) {
  std::ostringstream os;
  os << "# envpoison " << kVersion << " " << spec.mode << "\n";
  os << "# spec " << spec.raw.dump() << "\n";
  if (spec.mode == "online") {
    os << "# seeds " << spec.online.seed << ".." << spec.online.seed + spec.online.runs - 1 << "\n";
  }
  return os.str();
}

}  // namespace

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "RAttack" || name == "r") return AttackKind::kRAttack;
  if (name == "DAttack" || name == "d") return AttackKind::kDAttack;
  if (name == "JAttack" || name == "j") return AttackKind::kJAttack;
  if (name == "NT-JAttack" || name == "ntj") return AttackKind::kNtJAttack;
  if (name == "None" || name == "none") return AttackKind::kNone;
  throw Error(ErrorCode::kConfiguration, "unknown attack '" + name + "'");
}

const char* attack_kind_name(AttackKind kind) noexcept {
  switch (kind) {
    case AttackKind::kRAttack: return "RAttack";
    case AttackKind::kDAttack: return "DAttack";
    case AttackKind::kJAttack: return "JAttack";
    case AttackKind::kNtJAttack: return "NT-JAttack";
    case AttackKind::kNone: return "None";
  }
  return "unknown";
}

ExperimentSpec parse_experiment(const Json& j, const std::string& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::kConfiguration, "experiment spec must be a JSON object");
  ExperimentSpec spec;
  spec.raw = j;
  spec.base_dir = base_dir;
  try {
    spec.mode = j.value("mode", std::string("offline"));
    if (spec.mode != "offline" && spec.mode != "online") {
      throw Error(ErrorCode::kConfiguration, "mode must be \"offline\" or \"online\"");
    }
    spec.environment = j.value("environment", Json{{"type", "chain"}});
    if (j.contains("target_policy")) spec.target = policy_from_json(j.at("target_policy"));
    for (const auto& name : j.value("attacks", std::vector<std::string>{})) {
      spec.attacks.push_back(parse_attack_kind(name));
    }
    spec.attack.p_norm = spec.mode == "online" ? 1.0 : kInf;
    if (j.contains("attack_config")) {
      const Json& c = j.at("attack_config");
      spec.attack.c_r = c.value("c_r", spec.attack.c_r);
      spec.attack.c_p = c.value("c_p", spec.attack.c_p);
      if (c.contains("p_norm")) spec.attack.p_norm = parse_norm(c.at("p_norm"));
      spec.attack.epsilon = c.value("epsilon", spec.attack.epsilon);
      spec.attack.delta = c.value("delta", spec.attack.delta);
      spec.attack.pool_points = c.value("pool_points", spec.attack.pool_points);
    }
    validate_config(spec.attack);
    if (j.contains("sweep")) {
      const Json& s = j.at("sweep");
      SweepSpec sweep;
      sweep.axis = s.at("axis").get<std::string>();
      if (sweep.axis != "epsilon" && sweep.axis != "reward_s0") {
        throw Error(ErrorCode::kConfiguration, "sweep axis must be epsilon or reward_s0");
      }
      sweep.values = parse_values(s);
      if (sweep.values.empty()) throw Error(ErrorCode::kConfiguration, "sweep range is empty");
      spec.sweep = std::move(sweep);
    }
    if (j.contains("online")) {
      const Json& o = j.at("online");
      spec.online.learner = o.value("learner", spec.online.learner);
      spec.online.horizon = o.value("horizon", spec.online.horizon);
      spec.online.runs = o.value("runs", spec.online.runs);
      spec.online.seed = o.value("seed", spec.online.seed);
      spec.online.exploration = o.value("exploration", spec.online.exploration);
      spec.online.rate_exponent = o.value("rate_exponent", spec.online.rate_exponent);
      spec.online.ucrl.confidence = o.value("confidence", spec.online.ucrl.confidence);
      spec.online.ucrl.reward_scale = o.value("reward_scale", spec.online.ucrl.reward_scale);
      spec.online.ucrl.transition_scale = o.value("transition_scale", spec.online.ucrl.transition_scale);
    }
    spec.output_dir = j.value("output_dir", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, e.what());
  }

  // Checks that need the environment.
  const Environment env = build_environment(spec);
  if (spec.sweep && spec.sweep->axis == "reward_s0") {
    const std::string type = spec.environment.value("type", std::string());
    if (type != "chain" && type != "navigation") {
      throw Error(ErrorCode::kConfiguration, "reward_s0 sweep needs a chain or navigation environment");
    }
  }
  for (AttackKind kind : spec.attacks) {
    if (kind == AttackKind::kRAttack && !std::isinf(spec.attack.p_norm) && spec.attack.p_norm != 1.0) {
      throw Error(ErrorCode::kConfiguration, "RAttack supports p_norm 1 or inf only");
    }
    if (kind == AttackKind::kNone && spec.mode == "offline") {
      throw Error(ErrorCode::kConfiguration, "attack None is only meaningful online");
    }
  }
  if (spec.mode == "online") {
    if (spec.online.learner == "ucrl") {
      if (!env.mdp.is_average_reward()) throw Error(ErrorCode::kConfiguration, "ucrl needs gamma = 1");
    } else if (spec.online.learner == "qlearn") {
      if (env.mdp.is_average_reward()) throw Error(ErrorCode::kConfiguration, "qlearn needs gamma < 1");
    } else {
      throw Error(ErrorCode::kConfiguration, "learner must be ucrl or qlearn");
    }
    if (spec.online.horizon == 0 || spec.online.runs == 0) {
      throw Error(ErrorCode::kConfiguration, "horizon and runs must be positive");
    }
  }
  return spec;
}

Environment build_environment(const ExperimentSpec& spec, std::optional<double> reward_s0) {
  const Json& e = spec.environment;
  Environment env;
  if (e.contains("file")) {
    const Json doc = read_json_file(resolve(spec.base_dir, e.at("file").get<std::string>()));
    env.mdp = mdp_from_json(doc);
    if (doc.contains("target_policy")) env.target = policy_from_json(doc);
  } else if (e.contains("type")) {
    const auto type = e.at("type").get<std::string>();
    const double gamma = e.value("gamma", 1.0);
    const double r0 = reward_s0.value_or(e.value("reward_s0", type == "chain" ? -2.5 : 0.0));
    if (type == "chain") {
      env = build_chain(r0, e.value("n_states", std::size_t{4}), gamma);
    } else if (type == "navigation") {
      env = build_navigation(r0, gamma);
    } else {
      throw Error(ErrorCode::kConfiguration, "unknown environment type '" + type + "'");
    }
  } else {
    env.mdp = mdp_from_json(e);
    if (e.contains("target_policy")) env.target = policy_from_json(e);
  }
  if (spec.target) env.target = *spec.target;
  require_valid(env.mdp);
  if (env.target.size() == 0) throw Error(ErrorCode::kConfiguration, "no target policy given");
  require_policy(env.mdp, env.target);
  return env;
}

std::optional<AttackSolution> online_attack(const Environment& env, AttackKind kind,
                                            const AttackConfig& cfg) {
  AttackConfig c = cfg;
  switch (kind) {
    case AttackKind::kNone: return std::nullopt;
    case AttackKind::kRAttack: c.mode = AttackMode::kRewardsOnly; break;
    case AttackKind::kDAttack: c.mode = AttackMode::kTransitionsOnly; break;
    case AttackKind::kJAttack: c.mode = AttackMode::kJoint; break;
    case AttackKind::kNtJAttack: c.mode = AttackMode::kNonTargetOnly; break;
  }
  AttackSolution sol = solve_attack(env.mdp, env.target, c);
  if (!sol.feasible) return std::nullopt;
  return sol;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  ExperimentResult result;
  std::ostringstream csv;
  csv << header(spec);
  const std::vector<double> points =
      spec.sweep ? spec.sweep->values : std::vector<double>{spec.attack.epsilon};
  const bool sweep_reward = spec.sweep && spec.sweep->axis == "reward_s0";
  result.summary = Json::array();

  if (spec.mode == "offline") {
    csv << "sweep_value,attack,feasible,cost\n";
    for (double v : points) {
      const Environment env = build_environment(spec, sweep_reward ? std::optional<double>(v) : std::nullopt);
      AttackConfig cfg = spec.attack;
      if (!sweep_reward) cfg.epsilon = v;
      for (AttackKind kind : spec.attacks) {
        auto sol = online_attack(env, kind, cfg);
        ++result.result_count;
        const bool feasible = sol.has_value();
        if (feasible) ++result.feasible_count;
        const double cost = feasible ? sol->cost : kInf;
        csv << format_number(v) << ',' << attack_kind_name(kind) << ',' << (feasible ? 1 : 0) << ','
            << (feasible ? format_number(cost) : std::string("")) << '\n';
        result.summary.push_back({{"sweep_value", v},
                                  {"attack", attack_kind_name(kind)},
                                  {"feasible", feasible},
                                  {"cost", feasible ? Json(cost) : Json(nullptr)}});
      }
    }
  } else {
    csv << "sweep_value,attack,t,avg_miss_mean,avg_miss_sem,avg_cost_mean,avg_cost_sem\n";
    for (double v : points) {
      const Environment env = build_environment(spec, sweep_reward ? std::optional<double>(v) : std::nullopt);
      AttackConfig cfg = spec.attack;
      if (!sweep_reward) cfg.epsilon = v;
      for (AttackKind kind : spec.attacks) {
        ++result.result_count;
        std::optional<AttackSolution> sol = online_attack(env, kind, cfg);
        if (kind != AttackKind::kNone && !sol) {
          csv << format_number(v) << ',' << attack_kind_name(kind) << ",,,,,\n";
          continue;
        }
        ++result.feasible_count;
        SimConfig sim;
        sim.horizon = spec.online.horizon;
        sim.seed = spec.online.seed;
        sim.cost_cfg = cfg;
        if (sol) sim.sampling = sol->poisoned;
        const std::size_t ns = env.mdp.n_states, na = env.mdp.n_actions;
        LearnerFactory factory;
        if (spec.online.learner == "ucrl") {
          const UcrlOptions opt = spec.online.ucrl;
          factory = [=](std::uint64_t seed) { return std::make_unique<UcrlLearner>(ns, na, opt, seed); };
        } else {
          QLearningOptions opt;
          opt.gamma = env.mdp.gamma;
          opt.exploration = spec.online.exploration;
          opt.rate_exponent = spec.online.rate_exponent;
          factory = [=](std::uint64_t seed) { return std::make_unique<QLearner>(ns, na, opt, seed); };
        }
        const BatchResult batch = run_batch(env.mdp, env.target, factory, sim, spec.online.runs);
        for (const auto& p : batch.points) {
          csv << format_number(v) << ',' << attack_kind_name(kind) << ',' << p.t << ','
              << format_number(p.avg_miss_mean) << ',' << format_number(p.avg_miss_sem) << ','
              << format_number(p.avg_cost_mean) << ',' << format_number(p.avg_cost_sem) << '\n';
        }
        result.summary.push_back({{"sweep_value", v},
                                  {"attack", attack_kind_name(kind)},
                                  {"checkpoints", batch_to_json(batch)}});
      }
    }
  }
  result.csv = csv.str();

  if (!spec.output_dir.empty()) {
    const std::filesystem::path dir = resolve(spec.base_dir, spec.output_dir);
    std::filesystem::create_directories(dir);
    const auto csv_path = (dir / (spec.mode + ".csv")).string();
    const auto json_path = (dir / (spec.mode + "_summary.json")).string();
    write_text_file(csv_path, result.csv);
    write_text_file(json_path, result.summary.dump(2) + "\n");
    result.files = {csv_path, json_path};
  }
  return result;
}

}  // namespace envpoison
