// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mecopt/harness.hpp"
#include "mecopt/netmodel.hpp"
#include "mecopt/optimizer.hpp"
#include "mecopt/prompting.hpp"
#include "mecopt/scenario.hpp"
#include "mecopt/solvers.hpp"
#include "oracles.hpp"

namespace {

using namespace mecopt;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void require(bool cond, const std::string& what) {
    if (!cond && v_.pass) {
      v_.pass = false;
      v_.detail = what;
    }
  }
  void note(const std::string& s) {
    if (v_.pass) v_.detail = s;
  }
  Verdict verdict() const { return v_; }

 private:
  Verdict v_;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Verdict ac1() {
  Check c;
  const auto L = reference_matrix_balanced();
  const auto t0 = Clock::now();
  const auto r = brute_force(L);
  const double ms = ms_since(t0);
  c.require(std::abs(r.objective.max_latency_s - 0.126) <= 1e-12,
            "optimum " + fmt("%.17g", r.objective.max_latency_s));
  c.require(r.allocation == Allocation(3, {2, 0, 1}), "allocation " + r.allocation.to_string_one_based());
  c.require(oracle::exhaustive_minmax(oracle::balanced()).best == r.objective.max_latency_s,
            "disagrees with independent enumeration");
  c.require(ms < 10.0, "runtime " + fmt("%.3f ms", ms));
  c.note("0.126 s at " + r.allocation.to_string_one_based() + ", " + fmt("%.3f ms", ms));
  return c.verdict();
}

Verdict ac2() {
  Check c;
  const auto L = reference_matrix_imbalanced();
  const auto t0 = Clock::now();
  const auto r = brute_force(L);
  const double ms = ms_since(t0);
  c.require(std::abs(r.objective.max_latency_s - 0.264) <= 1e-12,
            "optimum " + fmt("%.17g", r.objective.max_latency_s));
  c.require(r.allocation == Allocation(3, {0, 2, 1}), "allocation " + r.allocation.to_string_one_based());
  const Allocation local(3, {2, 2, 0});
  const auto lo = objective(local, L);
  c.require(std::abs(lo.max_latency_s - 0.269) <= 1e-12, "local configuration " + fmt("%.17g", lo.max_latency_s));
  c.require(lo.per_server_loads[1] == 0.0, "server 2 is not empty");
  // No single-user reassignment improves it.
  for (std::size_t u = 0; u < 3; ++u) {
    for (std::uint32_t s = 0; s < 3; ++s) {
      std::vector<std::uint32_t> v(local.servers_of_user().begin(), local.servers_of_user().end());
      if (v[u] == s) continue;
      v[u] = s;
      c.require(objective(Allocation(3, v), L).max_latency_s >= lo.max_latency_s,
                "neighbour improves on the local configuration");
    }
  }
  c.require(ms < 10.0, "runtime " + fmt("%.3f ms", ms));
  c.note("0.264 s at " + r.allocation.to_string_one_based() + "; [3, 3, 1] = 0.269 s is a local minimum, " +
         fmt("%.3f ms", ms));
  return c.verdict();
}

// Reply mix: well-formed, out-of-range, wrong length, prose, garbage tokens.
std::string scripted_reply(std::mt19937_64& rng, std::size_t m, std::size_t n) {
  std::ostringstream os;
  const int lines = 1 + static_cast<int>(rng() % 6);
  for (int l = 0; l < lines; ++l) {
    const int kind = static_cast<int>(rng() % 6);
    std::size_t len = n;
    if (kind == 2) len = (rng() % 2 || n == 1) ? n + 1 : n - 1;
    if (kind == 3) {
      os << "I would move user " << 1 + rng() % n << " to server " << 1 + rng() % m << ".\n";
      continue;
    }
    os << (kind == 5 ? "allocation : [" : "Allocation: [");
    for (std::size_t a = 0; a < len; ++a) {
      if (a) os << ", ";
      if (kind == 1 && a == 0) {
        os << (rng() % 2 ? 0 : m + 1 + rng() % 3);
      } else if (kind == 4 && a == len - 1) {
        os << "x";
      } else {
        os << 1 + rng() % m;
      }
    }
    os << "]\n";
  }
  return os.str();
}

Verdict ac3() {
  Check c;
  std::mt19937_64 rng(31337);
  const std::vector<LatencyMatrix> mats{reference_matrix_balanced(), reference_matrix_imbalanced(),
                                        default_convergence_scenario().matrix(),
                                        LatencyMatrix::from_rows(oracle::random_matrix(rng, 4, 5))};
  std::size_t iterations = 0, recorded = 0, rejected = 0, audited = 0, infeasible = 0;
  for (int run = 0; run < 10; ++run) {
    const auto& L = mats[run % mats.size()];
    const std::size_t m = L.num_servers(), n = L.num_users();
    std::vector<std::string> replies;
    for (int k = 0; k < 500; ++k) replies.push_back(scripted_reply(rng, m, n));
    ScriptedBackend backend(std::move(replies));
    LoopConfig cfg;
    cfg.max_iterations = 100;
    AgentLoop agent(L, backend, cfg);
    agent.on_record = [&](const Observation& o) {
      ++recorded;
      if (o.allocation.num_users() != n || !is_feasible_onehot(o.allocation.to_onehot())) ++infeasible;
    };
    agent.run(cfg.max_iterations);
    const auto res = agent.result();
    iterations += res.trajectory.records.size();
    rejected += res.rejected_candidates;
    c.require(!res.error.has_value(), "backend stopped early: " + res.error.value_or(""));
    for (const auto& o : agent.buffer().items()) {
      ++audited;
      if (!is_feasible_onehot(o.allocation.to_onehot())) ++infeasible;
    }
    const auto space = *index_space_size(m, n);
    for (const auto& rec : res.trajectory.records) {
      for (const auto& cand : rec.candidates) {
        ++audited;
        if (cand.index.value >= space) {
          ++infeasible;
          continue;
        }
        const auto a = decode_index(cand.index, m, n);
        if (!is_feasible_onehot(a.to_onehot()) || objective(a, L).max_latency_s != cand.objective_s) {
          ++infeasible;
        }
      }
    }
    try {
      check_trajectory(res.trajectory);
    } catch (const std::exception& e) {
      c.require(false, e.what());
    }
  }
  c.require(iterations == 1000, "ran " + std::to_string(iterations) + " iterations");
  c.require(rejected > 0, "script mix produced no rejections");
  c.require(infeasible == 0, std::to_string(infeasible) + " infeasible allocations recorded");
  c.note(std::to_string(iterations) + " iterations, " + std::to_string(recorded) + " recorded, " +
         std::to_string(rejected) + " rejected, " + std::to_string(audited) + " audited, 0 infeasible");
  return c.verdict();
}

constexpr std::uint64_t kConvergenceSeed = 7;

Verdict ac4() {
  Check c;
  const auto L = reference_matrix_balanced();
  LoopConfig cfg;  // 20 iterations, 5 candidates, N-shot 20
  c.require(cfg.max_iterations == 20 && cfg.candidates_per_iteration == 5 && cfg.nshot_capacity == 20,
            "loop defaults changed");
  const auto t0 = Clock::now();
  HeuristicBackend b1(kConvergenceSeed);
  const auto r1 = optimize(L, b1, cfg);
  const double ms = ms_since(t0);
  HeuristicBackend b2(kConvergenceSeed);
  const auto r2 = optimize(L, b2, cfg);
  c.require(r1.best_objective && std::abs(r1.best_objective->max_latency_s - 0.126) <= 1e-12,
            "best " + (r1.best_objective ? fmt("%.17g", r1.best_objective->max_latency_s) : std::string("none")));
  c.require(r1.trajectory.records.size() <= 20, "more than 20 iterations");
  c.require(r1.trajectory == r2.trajectory, "rerun differs");
  c.require(ms < 1000.0, "runtime " + fmt("%.1f ms", ms));
  const auto it = r1.trajectory.iterations_to_best();
  c.note("seed 7 reaches 0.126 s at iteration " + (it ? std::to_string(*it) : std::string("?")) +
         ", rerun identical, " + fmt("%.1f ms", ms));
  return c.verdict();
}

Verdict ac5() {
  Check c;
  const auto L = reference_matrix_balanced();
  GAConfig cfg;
  cfg.seed = 42;
  const auto a = ga_run(L, cfg);
  const auto b = ga_run(L, cfg);
  c.require(cfg.population_per_iter == 5 && cfg.iterations == 50, "GA defaults changed");
  c.require(a.total_evaluations == 250, "evaluations " + std::to_string(a.total_evaluations));
  std::size_t counted = 0;
  double prev = INFINITY;
  for (const auto& r : a.records) {
    counted += r.candidates.size();
    c.require(r.best_so_far && r.best_so_far->objective_s <= prev, "best-so-far increased");
    if (r.best_so_far) prev = r.best_so_far->objective_s;
  }
  c.require(counted == 250, "recorded candidates " + std::to_string(counted));
  c.require(a == b, "double run differs");
  c.note("250 evaluations, monotone best-so-far, double run identical");
  return c.verdict();
}

Verdict ac6() {
  Check c;
  const auto space = *index_space_size(3, 6);
  c.require(space == 729, "3^6 = " + std::to_string(space));
  for (std::uint64_t s = 0; s < space; ++s) {
    const auto a = decode_index({s}, 3, 6);
    // Independent weighted sum over users, user 1 most significant.
    std::uint64_t w = 0;
    for (std::size_t u = 0; u < 6; ++u) w = w * 3 + a.server_of(u);
    c.require(encode_index(a).value == s && w == s, "round trip fails at " + std::to_string(s));
  }
  c.require(encode_index(Allocation(3, {0, 1, 2})).value == 5, "(0,1,2) does not encode to 5");
  c.require(decode_index({5}, 3, 3) == Allocation(3, {0, 1, 2}), "5 does not decode to (0,1,2)");
  c.note("729/729 round trips, 5 <-> (0,1,2)");
  return c.verdict();
}

Verdict ac7() {
  Check c;
  std::mt19937_64 rng(7007);
  std::uniform_real_distribution<double> bw(1e6, 20e6), pw(0.1, 2.0), dist(1.0, 1414.0),
      de(2.0, 4.0), noise(-90.0, -60.0), bits(1e5, 1e7), coef(100.0, 1000.0), cpu(1e8, 1e10);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double d_e = de(rng);
    const double h = std::pow(dist(rng), -d_e);
    const double b = bw(rng), p = pw(rng), nz = noise(rng), data = bits(rng);
    const double got = transmission_latency(data, b, p, h, nz);
    const double want = oracle::transmission_seconds(data, b, p, h, nz);
    worst = std::max(worst, std::abs(got - want) / want);
    const double cycles = coef(rng) * data, rate = cpu(rng);
    const double ce = computation_latency(cycles, rate);
    const double cw = oracle::computation_seconds(cycles, rate);
    worst = std::max(worst, std::abs(ce - cw) / cw);
  }
  c.require(worst <= 1e-9, "worst relative error " + fmt("%.3g", worst));
  const double lt = transmission_latency(5e6, 10e6, 0.5, 1e-6, -75.0);
  c.require(std::abs(lt - 0.035845460466127105) <= 1e-12, "transmission " + fmt("%.17g", lt));
  c.require(std::abs(lt - 0.03584) / 0.03584 < 1e-3, "transmission not ~0.03584 s");
  const double le = computation_latency(330 * 5e6, 1e9);
  c.require(std::abs(le - 1.65) <= 1e-12, "computation " + fmt("%.17g", le));
  c.note("worst relative error " + fmt("%.2g", worst) + ", L^t = " + fmt("%.6f s", lt) + ", L^e = " +
         fmt("%.2f s", le));
  return c.verdict();
}

Verdict ac8() {
  Check c;
  std::mt19937_64 rng(8008);
  int violations = 0, ties = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t m = 1 + rng() % 4, n = 1 + rng() % 7;
    const auto raw = oracle::random_matrix(rng, m, n);
    const double lb = objective_lower_bound(LatencyMatrix::from_rows(raw));
    const double opt = oracle::exhaustive_minmax(raw).best;
    if (lb > opt) ++violations;
    if (lb == opt) ++ties;
  }
  c.require(violations == 0, std::to_string(violations) + " matrices with bound above optimum");
  const auto L = reference_matrix_balanced();
  const double lb = objective_lower_bound(L);
  const double opt = brute_force(L).objective.max_latency_s;
  c.require(std::abs(lb - 0.126) <= 1e-12 && lb == opt, "balanced bound " + fmt("%.17g", lb));
  c.note("1000 matrices, 0 violations, balanced bound = optimum = 0.126 s");
  return c.verdict();
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict ac9() {
  Check c;
  const std::filesystem::path dir(MECOPT_TEST_GOLDEN_DIR);
  struct Case {
    std::string file;
    std::string text;
  };
  std::vector<Case> cases;
  {
    const auto L = reference_matrix_balanced();
    cases.push_back({"prompt_balanced_empty.txt", build_prompt(L, ObservationBuffer{}, 5).text});
  }
  {
    const auto L = reference_matrix_imbalanced();
    ObservationBuffer b;
    std::size_t it = 1;
    for (std::uint64_t s : {0u, 13u, 26u}) record(b, decode_index({s}, 3, 3), L, it++);
    cases.push_back({"prompt_imbalanced_3obs.txt", build_prompt(L, b, 5).text});
  }
  {
    const auto L = default_convergence_scenario().matrix();
    ObservationBuffer b;
    for (std::uint64_t s = 0; s < 25; ++s) record(b, decode_index({s * 29}, 3, 6), L, s / 5 + 1);
    cases.push_back({"prompt_seeded_full.txt", build_prompt(L, b, 3).text});
  }
  for (const auto& cs : cases) {
    const std::string golden = read_file(dir / cs.file);
    c.require(!golden.empty(), "missing golden " + cs.file);
    c.require(golden == cs.text, "golden mismatch " + cs.file);
    std::size_t pos = 0;
    std::vector<std::size_t> at;
    for (std::size_t k = 0; k < kPromptSectionCount; ++k) {
      const std::string h = "## " + std::to_string(k + 1) + ". " +
                            std::string(section_title(static_cast<PromptSection>(k)));
      const auto p = golden.find(h, pos);
      c.require(p != std::string::npos, cs.file + " lacks or misorders '" + h + "'");
      if (p == std::string::npos) break;
      at.push_back(p);
      pos = p + h.size();
    }
    const auto cons = golden.find(std::string(section_title(PromptSection::constraint_enforcement)));
    const auto obj = golden.find(std::string(section_title(PromptSection::objective_description)));
    c.require(cons != std::string::npos && obj != std::string::npos && cons < obj,
              cs.file + ": constraints do not precede the objective");
  }
  c.require(cases[0].text.find(kNoPriorSolutionsMarker) != std::string::npos,
            "empty-buffer case lacks the marker");
  c.note("3 golden prompts match, 6 sections in order, constraints before objective");
  return c.verdict();
}

MultiAgentResult ensemble(const LatencyMatrix& L, std::uint64_t base_seed) {
  MultiAgentConfig cfg;  // 10 agents, 5 + 15 iterations, keep 3
  return run_multi_agent(L, cfg, [base_seed](std::size_t i) {
    return std::make_unique<HeuristicBackend>(base_seed + i);
  });
}

constexpr int kEnsembleReps = 20;

Verdict ac10() {
  Check c;
  const auto L = reference_matrix_imbalanced();
  const double opt = 0.264;
  MultiAgentConfig defaults;
  c.require(defaults.pool_size == 10 && defaults.preliminary_iterations == 5 &&
                defaults.continuation_iterations == 15 && defaults.selected_agents == 3,
            "multi-agent defaults changed");
  const auto res = ensemble(L, 1);  // seeds 1..10
  c.require(res.selected.size() == 3 && res.selection.chosen.size() == 3,
            "selected " + std::to_string(res.selected.size()));
  LoopConfig single_cfg;
  single_cfg.max_iterations = 20;
  HeuristicBackend single_backend(1);
  const auto single = optimize(L, single_backend, single_cfg);
  c.require(res.overall_best && single.best_objective &&
                res.overall_best->objective_s <= single.best_objective->max_latency_s,
            "ensemble best worse than single agent");
  int hits = 0;
  for (int r = 0; r < kEnsembleReps; ++r) {
    const auto e = ensemble(L, 1 + 10 * static_cast<std::uint64_t>(r));
    if (e.overall_best && std::abs(e.overall_best->objective_s - opt) <= 1e-12) ++hits;
  }
  c.require(hits * 2 > kEnsembleReps, "ensemble reached 0.264 s in " + std::to_string(hits) + "/20");
  c.note("3 selected; ensemble " + fmt("%.3f s", res.overall_best ? res.overall_best->objective_s : NAN) +
         " <= single " + fmt("%.3f s", single.best_objective ? single.best_objective->max_latency_s : NAN) +
         "; optimum in " + std::to_string(hits) + "/20 repetitions");
  return c.verdict();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"AC1 brute force on the balanced matrix", ac1},
      {"AC2 brute force on the imbalanced matrix", ac2},
      {"AC3 constraint compliance over 1000 iterations", ac3},
      {"AC4 heuristic-stub convergence on the balanced matrix", ac4},
      {"AC5 GA evaluation accounting", ac5},
      {"AC6 index encoding bijection", ac6},
      {"AC7 latency formula fidelity", ac7},
      {"AC8 lower-bound soundness", ac8},
      {"AC9 prompt structure golden files", ac9},
      {"AC10 multi-agent protocol", ac10},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    if (!v.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
