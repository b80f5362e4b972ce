#pragma once

// Per-iteration record of what an optimizer evaluated. Candidates are stored
// by allocation index; decode_index() recovers the allocation.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecopt/assignment.hpp"

namespace mecopt {

struct Candidate {
  AllocationIndex index;
  double objective_s = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  std::vector<Candidate> candidates;
  // Empty until the first feasible candidate has been evaluated.
  std::optional<Candidate> best_so_far;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

enum class StopReason { iteration_cap, threshold, backend_failure, exhausted };

std::string to_string(StopReason reason);
StopReason stop_reason_from_string(const std::string& text);

struct Trajectory {
  std::string method;
  std::size_t num_servers = 0;
  std::size_t num_users = 0;
  std::vector<IterationRecord> records;
  std::size_t total_evaluations = 0;
  StopReason stop_reason = StopReason::iteration_cap;

  std::optional<Candidate> best() const;
  // 1-based iteration at which the final best value was first reached.
  std::optional<std::size_t> iterations_to_best() const;
  // Every candidate index ever evaluated, in order of evaluation.
  std::vector<AllocationIndex> visited() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Throws ContractViolation describing the first broken invariant:
// best-so-far non-increasing and consistent with the candidates seen so far,
// iterations numbered 1..K, total_evaluations equal to the candidate count,
// every index inside [0, M^N).
void check_trajectory(const Trajectory& t);

// Incrementally builds a trajectory while tracking the full objective of the
// incumbent so ties resolve by the load-vector order.
class TrajectoryBuilder {
 public:
  TrajectoryBuilder(std::string method, std::size_t num_servers, std::size_t num_users);

  void begin_iteration();
  // Returns true when the candidate became the new best-so-far.
  bool add(const Allocation& alloc, const Objective& obj);
  void end_iteration();

  const std::optional<Objective>& best_objective() const { return best_obj_; }
  const std::optional<Allocation>& best_allocation() const { return best_alloc_; }
  std::size_t iterations() const { return t_.records.size(); }

  Trajectory& trajectory() { return t_; }
  const Trajectory& trajectory() const { return t_; }
  Trajectory finish(StopReason reason) &&;

 private:
  Trajectory t_;
  std::optional<Objective> best_obj_;
  std::optional<Allocation> best_alloc_;
  std::optional<Candidate> best_;
  bool open_ = false;
};

nlohmann::json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);

// Columns: iteration,candidate_rank,allocation_index,objective_s,best_so_far_s,
// best_so_far_index.
// An iteration with no candidates is a single row with the three candidate
// columns empty. Objective values are written with 17 significant digits.
std::string trajectory_to_csv(const Trajectory& t);
// Dimensions and method are not part of the CSV and must be supplied.
Trajectory trajectory_from_csv(const std::string& csv, std::string method,
                               std::size_t num_servers, std::size_t num_users);

void write_trajectory_json(const Trajectory& t, const std::filesystem::path& path);
Trajectory read_trajectory_json(const std::filesystem::path& path);
void write_trajectory_csv(const Trajectory& t, const std::filesystem::path& path);

}  // namespace mecopt
