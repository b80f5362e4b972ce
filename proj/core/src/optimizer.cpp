#include "mecopt/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <stdexcept>
#include <thread>

#include "mecopt/errors.hpp"

namespace mecopt {

void LoopConfig::validate() const {
  if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  if (candidates_per_iteration < 1) throw ValidationError("candidates_per_iteration must be >= 1");
  if (nshot_capacity < 1) throw ValidationError("nshot_capacity must be >= 1");
  if (latency_threshold_s && !(*latency_threshold_s > 0.0)) {
    throw ValidationError("latency threshold must be > 0");
  }
}

AgentLoop::AgentLoop(const LatencyMatrix& latency, Backend& backend, LoopConfig cfg,
                     std::string method)
    : latency_(latency),
      backend_(backend),
      cfg_(std::move(cfg)),
      buffer_(cfg_.nshot_capacity),
      builder_(std::move(method), latency.num_servers(), latency.num_users()) {
  cfg_.validate();
}

bool AgentLoop::run(std::size_t iterations) {
  for (std::size_t k = 0; k < iterations && !stopped_; ++k) iterate();
  return !stopped_;
}

void AgentLoop::iterate() {
  const std::size_t m = latency_.num_servers();
  const std::size_t n = latency_.num_users();
  builder_.begin_iteration();
  const std::size_t iteration = builder_.iterations();

  const PromptDocument prompt = build_prompt(latency_, buffer_, cfg_.candidates_per_iteration);
  CompletionRequest req;
  req.model_id = cfg_.model_id;
  req.temperature = cfg_.temperature;
  req.system_text = cfg_.system_text;
  req.user_text = prompt.text;

  for (std::size_t attempt = 0; attempt <= cfg_.reprompt_retries; ++attempt) {
    std::string reply;
    try {
      reply = backend_.complete(req);
    } catch (const std::exception& e) {
      error_ = e.what();
      stopped_ = true;
      reason_ = StopReason::backend_failure;
      builder_.end_iteration();
      return;
    }
    ++calls_;
    const ParseOutcome outcome = parse_response(reply, m, n, cfg_.candidates_per_iteration);
    rejected_ += outcome.rejected.size();
    if (outcome.ok()) {
      for (const Allocation& alloc : outcome.allocations) {
        const Observation obs = record(buffer_, alloc, latency_, iteration);
        if (on_record) on_record(obs);
        builder_.add(alloc, objective(alloc, latency_));
      }
      break;
    }
    req.user_text = with_diagnostic(prompt, outcome.diagnostic(m, n));
  }
  builder_.end_iteration();

  if (cfg_.latency_threshold_s && builder_.best_objective() &&
      builder_.best_objective()->max_latency_s < *cfg_.latency_threshold_s) {
    stopped_ = true;
    reason_ = StopReason::threshold;
  }
}

LoopResult AgentLoop::result() const {
  LoopResult r;
  r.trajectory = builder_.trajectory();
  r.trajectory.stop_reason = stopped_ ? reason_ : StopReason::iteration_cap;
  r.best_allocation = builder_.best_allocation();
  r.best_objective = builder_.best_objective();
  r.error = error_;
  r.backend_calls = calls_;
  r.rejected_candidates = rejected_;
  return r;
}

LoopResult optimize(const LatencyMatrix& latency, Backend& backend, const LoopConfig& cfg) {
  AgentLoop agent(latency, backend, cfg);
  agent.run(cfg.max_iterations);
  return agent.result();
}

void MultiAgentConfig::validate() const {
  if (pool_size < 1 || preliminary_iterations < 1 || selected_agents < 1) {
    throw ValidationError("multi-agent counts must be >= 1");
  }
  if (selected_agents > pool_size) throw ValidationError("selected_agents exceeds pool_size");
  loop.validate();
}

double jaccard_distance(const std::vector<AllocationIndex>& a,
                        const std::vector<AllocationIndex>& b) {
  const std::set<AllocationIndex> sa(a.begin(), a.end());
  const std::set<AllocationIndex> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& x : sa) common += sb.count(x);
  const std::size_t uni = sa.size() + sb.size() - common;
  return 1.0 - static_cast<double>(common) / static_cast<double>(uni);
}

namespace {

// Lower is better; trajectories that never evaluated anything rank last.
bool better_best(const Trajectory& a, const Trajectory& b) {
  const auto ba = a.best();
  const auto bb = b.best();
  if (!ba || !bb) return ba.has_value() && !bb.has_value();
  return ba->objective_s < bb->objective_s;
}

}  // namespace

DiversitySelection trajectory_diversity(const std::vector<Trajectory>& trajectories,
                                        std::size_t k) {
  if (k > trajectories.size()) {
    throw ContractViolation("cannot select " + std::to_string(k) + " of " +
                            std::to_string(trajectories.size()) + " trajectories");
  }
  DiversitySelection sel;
  if (k == 0) return sel;
  std::vector<std::vector<AllocationIndex>> visited;
  visited.reserve(trajectories.size());
  for (const auto& t : trajectories) visited.push_back(t.visited());

  std::size_t first = 0;
  for (std::size_t p = 1; p < trajectories.size(); ++p) {
    if (better_best(trajectories[p], trajectories[first])) first = p;
  }
  std::vector<bool> taken(trajectories.size(), false);
  sel.chosen.push_back(first);
  sel.pick_distance.emplace_back(std::nullopt);
  taken[first] = true;

  while (sel.chosen.size() < k) {
    std::optional<std::size_t> pick;
    double pick_d = -1.0;
    for (std::size_t p = 0; p < trajectories.size(); ++p) {
      if (taken[p]) continue;
      double d = 1.0;
      for (std::size_t c : sel.chosen) d = std::min(d, jaccard_distance(visited[p], visited[c]));
      const bool wins = !pick || d > pick_d ||
                        (d == pick_d && better_best(trajectories[p], trajectories[*pick]));
      if (wins) {
        pick = p;
        pick_d = d;
      }
    }
    sel.chosen.push_back(*pick);
    sel.pick_distance.emplace_back(pick_d);
    taken[*pick] = true;
  }
  return sel;
}

namespace {

// Runs job(i) for i in [0, count) on up to `workers` threads.
template <typename Job>
void parallel_for(std::size_t count, std::size_t workers, Job job) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace

MultiAgentResult run_multi_agent(const LatencyMatrix& latency, const MultiAgentConfig& cfg,
                                 const BackendFactory& factory) {
  cfg.validate();
  const std::size_t pool = cfg.pool_size;
  const std::size_t workers = cfg.max_concurrency ? cfg.max_concurrency : pool;

  std::vector<std::unique_ptr<Backend>> backends(pool);
  std::vector<std::unique_ptr<AgentLoop>> agents(pool);
  std::vector<std::string> setup_error(pool);

  parallel_for(pool, workers, [&](std::size_t i) {
    try {
      backends[i] = factory(i);
      if (!backends[i]) throw std::runtime_error("factory returned no backend");
      agents[i] = std::make_unique<AgentLoop>(latency, *backends[i], cfg.loop,
                                              "agent-" + std::to_string(i));
      agents[i]->run(cfg.preliminary_iterations);
    } catch (const std::exception& e) {
      setup_error[i] = e.what();
      agents[i].reset();
    }
  });

  MultiAgentResult out;
  std::vector<std::size_t> survivors;
  std::vector<Trajectory> prelim;
  for (std::size_t i = 0; i < pool; ++i) {
    if (!agents[i]) {
      out.failures.push_back("agent " + std::to_string(i) + ": " + setup_error[i]);
      continue;
    }
    LoopResult r = agents[i]->result();
    if (r.error) {
      out.failures.push_back("agent " + std::to_string(i) + ": " + *r.error);
      continue;
    }
    survivors.push_back(i);
    prelim.push_back(r.trajectory);
    out.preliminary.push_back({i, std::move(r)});
  }
  if (survivors.size() < cfg.selected_agents) {
    throw std::runtime_error("only " + std::to_string(survivors.size()) +
                             " agents survived the preliminary phase, " +
                             std::to_string(cfg.selected_agents) + " required");
  }

  out.selection = trajectory_diversity(prelim, cfg.selected_agents);
  std::vector<std::size_t> continued;
  for (std::size_t p : out.selection.chosen) continued.push_back(survivors[p]);

  parallel_for(continued.size(), workers, [&](std::size_t k) {
    agents[continued[k]]->run(cfg.continuation_iterations);
  });

  for (std::size_t agent : continued) {
    LoopResult r = agents[agent]->result();
    const auto best = r.trajectory.best();
    if (best && (!out.overall_best || best->objective_s < out.overall_best->objective_s)) {
      out.overall_best = best;
      out.best_agent = agent;
    }
    out.selected.push_back({agent, std::move(r)});
  }
  return out;
}

}  // namespace mecopt
