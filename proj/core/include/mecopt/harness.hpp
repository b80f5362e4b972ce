#pragma once

// Experiment plumbing behind the command-line verbs: run one method on a
// scenario, compare methods over trials, and serialize what came out.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecopt/llm_client.hpp"
#include "mecopt/optimizer.hpp"
#include "mecopt/scenario.hpp"
#include "mecopt/solvers.hpp"
#include "mecopt/trajectory.hpp"

namespace mecopt {

enum class Method { brute, ga, llm, multi, random };
std::string to_string(Method m);
Method method_from_string(const std::string& text);

// A trial counts as optimal when |best - optimum| <= this.
inline constexpr double kOptimalTolerance = 1e-12;

struct RunSummary {
  std::string scenario_id;
  std::string method;
  std::optional<double> best_objective_s;
  std::optional<std::uint64_t> best_allocation_index;
  std::optional<double> optimum_s;
  std::optional<double> optimality_gap_s;
  std::optional<std::size_t> iterations_to_best;
  std::size_t total_evaluations = 0;
  double wall_time_s = 0.0;
  bool partial = false;
  std::optional<std::string> error;

  bool is_optimal() const;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

nlohmann::json summary_to_json(const RunSummary& s);
RunSummary summary_from_json(const nlohmann::json& j);

struct SolveOptions {
  Method method = Method::llm;
  GAConfig ga;
  LoopConfig loop;
  MultiAgentConfig multi;
  RandomSearchConfig random;
  BackendDescriptor backend;
  std::uint64_t brute_cap = kDefaultBruteForceCap;
  // Run brute force alongside heuristics to fill optimum/gap when tractable.
  bool compute_optimum = true;

  // Applies one seed to every stochastic component of the selected method.
  void set_seed(std::uint64_t seed);
};

struct SolveOutput {
  RunSummary summary;
  // One trajectory per method run; several for multi (selected agents).
  std::vector<Trajectory> trajectories;
  bool backend_failed = false;
};

// Multi-agent backends: agent i receives the descriptor with seed + i.
BackendFactory backend_factory(const BackendDescriptor& descriptor);

SolveOutput solve(const Scenario& scenario, const SolveOptions& options);

struct TrialRecord {
  std::string method;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  RunSummary summary;
};

struct MethodAggregate {
  std::string method;
  std::size_t trials = 0;
  std::size_t optimal = 0;
  double optimal_rate = 0.0;
  std::optional<double> mean_iterations_to_best;
  std::optional<double> mean_best_s;
  std::size_t failed = 0;
};

struct CompareResult {
  std::string scenario_id;
  std::optional<double> optimum_s;
  std::vector<TrialRecord> trials;
  std::vector<MethodAggregate> aggregates;
  bool any_backend_failure = false;
};

// Trial t of every method uses seed base_seed + t. Trials run concurrently
// on up to max_concurrency threads (0 = hardware concurrency); results are
// ordered by (method, trial) regardless of scheduling.
CompareResult compare(const Scenario& scenario, const std::vector<Method>& methods,
                      std::size_t trials, std::uint64_t base_seed, const SolveOptions& base,
                      std::size_t max_concurrency = 0);

// Columns: method,trial,seed,best_s,optimum_s,gap_s,optimal,iterations_to_best,
// total_evaluations,error
std::string comparison_to_csv(const CompareResult& r);
nlohmann::json comparison_to_json(const CompareResult& r);

// Everything needed to reproduce a stub-backed run: scenario reference,
// backend descriptor (the credential variable's name, never its value),
// configs and seeds.
nlohmann::json build_manifest(const std::string& scenario_ref, const Scenario& scenario,
                              const SolveOptions& options);
nlohmann::json descriptor_to_json(const BackendDescriptor& d);
BackendDescriptor descriptor_from_json(const nlohmann::json& j);
nlohmann::json options_to_json(const SolveOptions& o);
SolveOptions options_from_json(const nlohmann::json& j);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

}  // namespace mecopt
