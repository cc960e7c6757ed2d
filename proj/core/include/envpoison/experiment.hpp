#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "envpoison/environments.hpp"
#include "envpoison/io.hpp"
#include "envpoison/learners.hpp"
#include "envpoison/offline.hpp"

namespace envpoison {

inline constexpr const char* kVersion = "0.1.0";

enum class AttackKind { kRAttack, kDAttack, kJAttack, kNtJAttack, kNone };

/// Accepts RAttack/DAttack/JAttack/NT-JAttack/None and the short forms r/d/j/ntj/none.
AttackKind parse_attack_kind(const std::string& name);
const char* attack_kind_name(AttackKind kind) noexcept;

struct SweepSpec {
  std::string axis;  // "epsilon" or "reward_s0"
  std::vector<double> values;
};

struct OnlineSpec {
  std::string learner = "ucrl";  // "ucrl" or "qlearn"
  std::size_t horizon = 300000;
  std::size_t runs = 20;
  std::uint64_t seed = 1;
  double exploration = 0.001;
  double rate_exponent = QLearningOptions{}.rate_exponent;
  UcrlOptions ucrl;
};

struct ExperimentSpec {
  std::string mode = "offline";  // "offline" or "online"
  Json environment;              // {"type": "chain"|"navigation", ...}, {"file": path} or inline MDP
  std::optional<Policy> target;
  std::vector<AttackKind> attacks;
  AttackConfig attack;
  std::optional<SweepSpec> sweep;
  OnlineSpec online;
  std::string output_dir;
  std::string base_dir;  // resolves relative file paths
  Json raw;              // the parsed document, echoed into headers
};

/// Validates everything that can be checked before compute; throws Error(kConfiguration).
ExperimentSpec parse_experiment(const Json& j, const std::string& base_dir = "");

/// Builds the environment; `reward_s0` overrides the builder parameter when set.
Environment build_environment(const ExperimentSpec& spec, std::optional<double> reward_s0 = {});

struct ExperimentResult {
  std::string csv;  // header lines start with '#'
  Json summary;
  std::size_t feasible_count = 0;
  std::size_t result_count = 0;
  std::vector<std::string> files;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Sampling MDP for an online attack of the given kind; nullopt for kNone or
/// an infeasible attack.
std::optional<AttackSolution> online_attack(const Environment& env, AttackKind kind,
                                            const AttackConfig& cfg);

}  // namespace envpoison
