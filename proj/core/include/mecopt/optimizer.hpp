#pragma once

// In-context refinement loop: prompt -> backend -> parse -> evaluate ->
// N-shot buffer, repeated until a latency threshold or the iteration cap.
// Plus a multi-agent variant that runs a pool, keeps the most mutually
// distinct trajectories and continues only those.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mecopt/llm_client.hpp"
#include "mecopt/prompting.hpp"
#include "mecopt/trajectory.hpp"

namespace mecopt {

struct LoopConfig {
  std::size_t max_iterations = 20;
  std::optional<double> latency_threshold_s;
  std::size_t candidates_per_iteration = 5;
  std::size_t reprompt_retries = 3;
  std::size_t nshot_capacity = kDefaultNShotCapacity;
  std::uint64_t seed = 0;
  std::string model_id = "gpt-4o-mini";
  double temperature = 1.0;
  std::string system_text;

  void validate() const;
};

struct LoopResult {
  Trajectory trajectory;
  std::optional<Allocation> best_allocation;
  std::optional<Objective> best_objective;
  // Set when a backend error ended the run early; the trajectory holds what
  // was evaluated up to that point.
  std::optional<std::string> error;
  std::size_t backend_calls = 0;
  std::size_t rejected_candidates = 0;
};

// One agent: owns its backend reference, buffer and trajectory so a run can
// be continued after a pause (the multi-agent protocol relies on this).
class AgentLoop {
 public:
  AgentLoop(const LatencyMatrix& latency, Backend& backend, LoopConfig cfg,
            std::string method = "llm");

  // Runs up to `iterations` more iterations. Returns false when the run has
  // stopped (threshold reached or backend failure).
  bool run(std::size_t iterations);
  bool stopped() const { return stopped_; }

  const ObservationBuffer& buffer() const { return buffer_; }
  const Trajectory& trajectory() const { return builder_.trajectory(); }
  LoopResult result() const;

  // Observer invoked for every observation recorded (tests use it to audit
  // feasibility of everything that enters the buffer).
  std::function<void(const Observation&)> on_record;

 private:
  void iterate();

  const LatencyMatrix& latency_;
  Backend& backend_;
  LoopConfig cfg_;
  ObservationBuffer buffer_;
  TrajectoryBuilder builder_;
  bool stopped_ = false;
  StopReason reason_ = StopReason::iteration_cap;
  std::optional<std::string> error_;
  std::size_t calls_ = 0;
  std::size_t rejected_ = 0;
};

LoopResult optimize(const LatencyMatrix& latency, Backend& backend, const LoopConfig& cfg);

struct MultiAgentConfig {
  std::size_t pool_size = 10;
  std::size_t preliminary_iterations = 5;
  std::size_t selected_agents = 3;
  std::size_t continuation_iterations = 15;
  LoopConfig loop;
  // Upper bound on agents running at once; 0 means pool_size.
  std::size_t max_concurrency = 0;

  void validate() const;
};

double jaccard_distance(const std::vector<AllocationIndex>& a,
                        const std::vector<AllocationIndex>& b);

struct DiversitySelection {
  std::vector<std::size_t> chosen;  // positions into the input list
  // Min distance to the previously chosen set at the time of each pick;
  // empty for the first pick.
  std::vector<std::optional<double>> pick_distance;
};

// Greedy max-min selection under Jaccard distance between visited index
// sets. The first pick is the best trajectory; ties break by better
// best-so-far, then by position.
DiversitySelection trajectory_diversity(const std::vector<Trajectory>& trajectories,
                                        std::size_t k);

struct AgentOutcome {
  std::size_t agent = 0;  // ordinal in the pool, 0-based
  LoopResult result;
};

struct MultiAgentResult {
  std::vector<AgentOutcome> preliminary;  // every agent that survived phase one
  std::vector<std::string> failures;      // agents dropped, with reasons
  DiversitySelection selection;           // positions into `preliminary`
  std::vector<AgentOutcome> selected;     // continued agents, full trajectories
  // Minimum over the selected agents; empty if none evaluated anything.
  std::optional<std::size_t> best_agent;
  std::optional<Candidate> overall_best;
};

using BackendFactory = std::function<std::unique_ptr<Backend>(std::size_t agent)>;

// Throws std::runtime_error when fewer than selected_agents survive the
// preliminary phase.
MultiAgentResult run_multi_agent(const LatencyMatrix& latency, const MultiAgentConfig& cfg,
                                 const BackendFactory& factory);

}  // namespace mecopt
