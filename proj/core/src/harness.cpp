#include "mecopt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "mecopt/errors.hpp"

namespace mecopt {

using nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::brute: return "brute";
    case Method::ga: return "ga";
    case Method::llm: return "llm";
    case Method::multi: return "multi";
    case Method::random: return "random";
  }
  return "unknown";
}

Method method_from_string(const std::string& text) {
  if (text == "brute") return Method::brute;
  if (text == "ga") return Method::ga;
  if (text == "llm") return Method::llm;
  if (text == "multi") return Method::multi;
  if (text == "random") return Method::random;
  throw ValidationError("unknown method \"" + text + "\" (brute|ga|llm|multi|random)");
}

bool RunSummary::is_optimal() const {
  return best_objective_s && optimum_s &&
         std::abs(*best_objective_s - *optimum_s) <= kOptimalTolerance;
}

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_cell(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void fill_from_trajectory(RunSummary& s, const Trajectory& t) {
  if (const auto best = t.best()) {
    s.best_objective_s = best->objective_s;
    s.best_allocation_index = best->index.value;
  }
  s.iterations_to_best = t.iterations_to_best();
  s.total_evaluations = t.total_evaluations;
}

void apply_optimum(RunSummary& s, std::optional<double> optimum) {
  s.optimum_s = optimum;
  s.optimality_gap_s.reset();
  if (optimum && s.best_objective_s) s.optimality_gap_s = *s.best_objective_s - *optimum;
}

template <typename Job>
void parallel_for(std::size_t count, std::size_t workers, Job job) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace

json summary_to_json(const RunSummary& s) {
  return json{{"scenario_id", s.scenario_id},
              {"method", s.method},
              {"best_objective_s", opt(s.best_objective_s)},
              {"best_allocation_index", opt(s.best_allocation_index)},
              {"optimum_s", opt(s.optimum_s)},
              {"optimality_gap_s", opt(s.optimality_gap_s)},
              {"iterations_to_best", opt(s.iterations_to_best)},
              {"total_evaluations", s.total_evaluations},
              {"wall_time_s", s.wall_time_s},
              {"partial", s.partial},
              {"error", opt(s.error)}};
}

RunSummary summary_from_json(const json& j) {
  try {
    RunSummary s;
    s.scenario_id = j.at("scenario_id").get<std::string>();
    s.method = j.at("method").get<std::string>();
    s.best_objective_s = opt_from<double>(j, "best_objective_s");
    s.best_allocation_index = opt_from<std::uint64_t>(j, "best_allocation_index");
    s.optimum_s = opt_from<double>(j, "optimum_s");
    s.optimality_gap_s = opt_from<double>(j, "optimality_gap_s");
    s.iterations_to_best = opt_from<std::size_t>(j, "iterations_to_best");
    s.total_evaluations = j.at("total_evaluations").get<std::size_t>();
    s.wall_time_s = j.at("wall_time_s").get<double>();
    s.partial = j.value("partial", false);
    s.error = opt_from<std::string>(j, "error");
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed run summary: ") + e.what());
  }
}

void SolveOptions::set_seed(std::uint64_t seed) {
  ga.seed = seed;
  random.seed = seed;
  loop.seed = seed;
  multi.loop.seed = seed;
  backend.seed = seed;
}

BackendFactory backend_factory(const BackendDescriptor& descriptor) {
  return [descriptor](std::size_t agent) {
    BackendDescriptor d = descriptor;
    if (d.seed) d.seed = *d.seed + agent;
    return make_backend(d);
  };
}

SolveOutput solve(const Scenario& scenario, const SolveOptions& options) {
  const LatencyMatrix latency = scenario.matrix();
  SolveOutput out;
  out.summary.scenario_id = scenario.id;
  out.summary.method = to_string(options.method);

  std::optional<double> optimum;
  const auto space = index_space_size(latency.num_servers(), latency.num_users());
  const bool tractable = space && *space <= options.brute_cap;
  if (options.compute_optimum && tractable && options.method != Method::brute) {
    optimum = brute_force(latency, options.brute_cap).objective.max_latency_s;
  }

  const auto start = std::chrono::steady_clock::now();
  switch (options.method) {
    case Method::brute: {
      const BruteForceResult r = brute_force(latency, options.brute_cap);
      TrajectoryBuilder b("brute", latency.num_servers(), latency.num_users());
      b.begin_iteration();
      b.add(r.allocation, r.objective);
      out.trajectories.push_back(std::move(b).finish(StopReason::exhausted));
      fill_from_trajectory(out.summary, out.trajectories.back());
      out.summary.total_evaluations = r.evaluated;
      optimum = r.objective.max_latency_s;
      break;
    }
    case Method::ga:
      out.trajectories.push_back(ga_run(latency, options.ga));
      fill_from_trajectory(out.summary, out.trajectories.back());
      break;
    case Method::random:
      out.trajectories.push_back(random_search(latency, options.random));
      fill_from_trajectory(out.summary, out.trajectories.back());
      break;
    case Method::llm: {
      auto backend = make_backend(options.backend);
      LoopResult r = optimize(latency, *backend, options.loop);
      out.trajectories.push_back(r.trajectory);
      fill_from_trajectory(out.summary, r.trajectory);
      if (r.error) {
        out.backend_failed = true;
        out.summary.partial = true;
        out.summary.error = r.error;
      }
      break;
    }
    case Method::multi: {
      MultiAgentConfig cfg = options.multi;
      cfg.loop = options.loop;
      try {
        MultiAgentResult r = run_multi_agent(latency, cfg, backend_factory(options.backend));
        std::size_t evaluations = 0;
        for (const auto& p : r.preliminary) {
          const bool continued = std::any_of(r.selected.begin(), r.selected.end(),
                                             [&](const auto& s) { return s.agent == p.agent; });
          if (!continued) evaluations += p.result.trajectory.total_evaluations;
        }
        for (const auto& s : r.selected) {
          evaluations += s.result.trajectory.total_evaluations;
          out.trajectories.push_back(s.result.trajectory);
          if (s.result.error) {
            out.backend_failed = true;
            out.summary.partial = true;
            out.summary.error = s.result.error;
          }
          if (r.best_agent && s.agent == *r.best_agent) {
            out.summary.iterations_to_best = s.result.trajectory.iterations_to_best();
          }
        }
        if (r.overall_best) {
          out.summary.best_objective_s = r.overall_best->objective_s;
          out.summary.best_allocation_index = r.overall_best->index.value;
        }
        out.summary.total_evaluations = evaluations;
      } catch (const BackendError&) {
        throw;
      } catch (const std::runtime_error& e) {
        out.backend_failed = true;
        out.summary.partial = true;
        out.summary.error = e.what();
      }
      break;
    }
  }
  out.summary.wall_time_s = seconds_since(start);
  apply_optimum(out.summary, optimum);
  return out;
}

CompareResult compare(const Scenario& scenario, const std::vector<Method>& methods,
                      std::size_t trials, std::uint64_t base_seed, const SolveOptions& base,
                      std::size_t max_concurrency) {
  if (methods.empty()) throw ValidationError("compare needs at least one method");
  if (trials == 0) throw ValidationError("compare needs at least one trial");
  CompareResult result;
  result.scenario_id = scenario.id;
  const LatencyMatrix latency = scenario.matrix();
  result.optimum_s = brute_force(latency, base.brute_cap).objective.max_latency_s;

  // Backends are built per trial from the descriptor, so a configuration
  // problem (e.g. missing credential) surfaces once, before any work.
  if (std::find(methods.begin(), methods.end(), Method::llm) != methods.end() ||
      std::find(methods.begin(), methods.end(), Method::multi) != methods.end()) {
    base.backend.validate();
  }

  const std::size_t jobs = methods.size() * trials;
  std::vector<TrialRecord> records(jobs);
  std::vector<std::string> config_errors(jobs);
  parallel_for(jobs, max_concurrency, [&](std::size_t job) {
    const Method method = methods[job / trials];
    const std::size_t trial = job % trials;
    SolveOptions o = base;
    o.method = method;
    o.compute_optimum = false;
    o.set_seed(base_seed + trial);
    TrialRecord& rec = records[job];
    rec.method = to_string(method);
    rec.trial = trial;
    rec.seed = base_seed + trial;
    try {
      SolveOutput s = solve(Scenario::from_matrix(scenario.id, latency), o);
      rec.summary = std::move(s.summary);
    } catch (const BackendError& e) {
      if (e.kind() == BackendError::Kind::configuration) config_errors[job] = e.what();
      rec.summary.scenario_id = scenario.id;
      rec.summary.method = rec.method;
      rec.summary.partial = true;
      rec.summary.error = e.what();
    }
    apply_optimum(rec.summary, result.optimum_s);
  });
  for (const auto& e : config_errors) {
    if (!e.empty()) throw BackendError(BackendError::Kind::configuration, e);
  }

  for (const Method method : methods) {
    MethodAggregate agg;
    agg.method = to_string(method);
    double iter_sum = 0.0;
    double best_sum = 0.0;
    std::size_t iter_n = 0;
    std::size_t best_n = 0;
    for (const auto& rec : records) {
      if (rec.method != agg.method) continue;
      ++agg.trials;
      if (rec.summary.is_optimal()) ++agg.optimal;
      if (rec.summary.partial) {
        ++agg.failed;
        result.any_backend_failure = true;
      }
      if (rec.summary.iterations_to_best) {
        iter_sum += static_cast<double>(*rec.summary.iterations_to_best);
        ++iter_n;
      }
      if (rec.summary.best_objective_s) {
        best_sum += *rec.summary.best_objective_s;
        ++best_n;
      }
    }
    agg.optimal_rate = static_cast<double>(agg.optimal) / static_cast<double>(agg.trials);
    if (iter_n) agg.mean_iterations_to_best = iter_sum / static_cast<double>(iter_n);
    if (best_n) agg.mean_best_s = best_sum / static_cast<double>(best_n);
    result.aggregates.push_back(agg);
  }
  result.trials = std::move(records);
  return result;
}

std::string comparison_to_csv(const CompareResult& r) {
  std::ostringstream os;
  os << "method,trial,seed,best_s,optimum_s,gap_s,optimal,iterations_to_best,total_evaluations,"
        "error\n";
  for (const auto& t : r.trials) {
    const auto& s = t.summary;
    os << t.method << ',' << t.trial << ',' << t.seed << ','
       << (s.best_objective_s ? fmt(*s.best_objective_s) : "") << ','
       << (s.optimum_s ? fmt(*s.optimum_s) : "") << ','
       << (s.optimality_gap_s ? fmt(*s.optimality_gap_s) : "") << ','
       << (s.is_optimal() ? 1 : 0) << ','
       << (s.iterations_to_best ? std::to_string(*s.iterations_to_best) : "") << ','
       << s.total_evaluations << ',' << csv_cell(s.error.value_or("")) << '\n';
  }
  return os.str();
}

json comparison_to_json(const CompareResult& r) {
  json aggregates = json::array();
  for (const auto& a : r.aggregates) {
    aggregates.push_back(json{{"method", a.method},
                              {"trials", a.trials},
                              {"optimal", a.optimal},
                              {"optimal_rate", a.optimal_rate},
                              {"mean_iterations_to_best", opt(a.mean_iterations_to_best)},
                              {"mean_best_s", opt(a.mean_best_s)},
                              {"failed", a.failed}});
  }
  json trials = json::array();
  for (const auto& t : r.trials) {
    trials.push_back(json{{"method", t.method},
                          {"trial", t.trial},
                          {"seed", t.seed},
                          {"summary", summary_to_json(t.summary)}});
  }
  return json{{"scenario_id", r.scenario_id},
              {"optimum_s", opt(r.optimum_s)},
              {"aggregates", std::move(aggregates)},
              {"trials", std::move(trials)}};
}

json descriptor_to_json(const BackendDescriptor& d) {
  return json{{"kind", to_string(d.kind)},
              {"endpoint", d.endpoint},
              {"credential_env", d.credential_env},
              {"script_path", d.script_path.string()},
              {"seed", opt(d.seed)},
              {"max_in_flight", d.max_in_flight}};
}

BackendDescriptor descriptor_from_json(const json& j) {
  BackendDescriptor d;
  d.kind = backend_kind_from_string(j.at("kind").get<std::string>());
  d.endpoint = j.value("endpoint", std::string{});
  d.credential_env = j.value("credential_env", std::string{});
  d.script_path = j.value("script_path", std::string{});
  d.seed = opt_from<std::uint64_t>(j, "seed");
  d.max_in_flight = j.value("max_in_flight", std::size_t{4});
  return d;
}

namespace {

json loop_to_json(const LoopConfig& c) {
  return json{{"max_iterations", c.max_iterations},
              {"latency_threshold_s", opt(c.latency_threshold_s)},
              {"candidates_per_iteration", c.candidates_per_iteration},
              {"reprompt_retries", c.reprompt_retries},
              {"nshot_capacity", c.nshot_capacity},
              {"seed", c.seed},
              {"model_id", c.model_id},
              {"temperature", c.temperature},
              {"system_text", c.system_text}};
}

LoopConfig loop_from_json(const json& j) {
  LoopConfig c;
  c.max_iterations = j.at("max_iterations").get<std::size_t>();
  c.latency_threshold_s = opt_from<double>(j, "latency_threshold_s");
  c.candidates_per_iteration = j.at("candidates_per_iteration").get<std::size_t>();
  c.reprompt_retries = j.at("reprompt_retries").get<std::size_t>();
  c.nshot_capacity = j.at("nshot_capacity").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.model_id = j.at("model_id").get<std::string>();
  c.temperature = j.at("temperature").get<double>();
  c.system_text = j.value("system_text", std::string{});
  return c;
}

}  // namespace

json options_to_json(const SolveOptions& o) {
  return json{
      {"method", to_string(o.method)},
      {"ga",
       {{"population_per_iter", o.ga.population_per_iter},
        {"iterations", o.ga.iterations},
        {"mutation_rate", opt(o.ga.mutation_rate)},
        {"tournament_size", o.ga.tournament_size},
        {"elitism", o.ga.elitism},
        {"seed", o.ga.seed}}},
      {"loop", loop_to_json(o.loop)},
      {"multi",
       {{"pool_size", o.multi.pool_size},
        {"preliminary_iterations", o.multi.preliminary_iterations},
        {"selected_agents", o.multi.selected_agents},
        {"continuation_iterations", o.multi.continuation_iterations},
        {"max_concurrency", o.multi.max_concurrency}}},
      {"random",
       {{"evaluations", o.random.evaluations},
        {"batch", o.random.batch},
        {"seed", o.random.seed},
        {"exhaustive", o.random.exhaustive}}},
      {"backend", descriptor_to_json(o.backend)},
      {"brute_cap", o.brute_cap},
      {"compute_optimum", o.compute_optimum}};
}

SolveOptions options_from_json(const json& j) {
  try {
    SolveOptions o;
    o.method = method_from_string(j.at("method").get<std::string>());
    const json& ga = j.at("ga");
    o.ga.population_per_iter = ga.at("population_per_iter").get<std::size_t>();
    o.ga.iterations = ga.at("iterations").get<std::size_t>();
    o.ga.mutation_rate = opt_from<double>(ga, "mutation_rate");
    o.ga.tournament_size = ga.at("tournament_size").get<std::size_t>();
    o.ga.elitism = ga.at("elitism").get<std::size_t>();
    o.ga.seed = ga.at("seed").get<std::uint64_t>();
    o.loop = loop_from_json(j.at("loop"));
    const json& multi = j.at("multi");
    o.multi.pool_size = multi.at("pool_size").get<std::size_t>();
    o.multi.preliminary_iterations = multi.at("preliminary_iterations").get<std::size_t>();
    o.multi.selected_agents = multi.at("selected_agents").get<std::size_t>();
    o.multi.continuation_iterations = multi.at("continuation_iterations").get<std::size_t>();
    o.multi.max_concurrency = multi.value("max_concurrency", std::size_t{0});
    o.multi.loop = o.loop;
    const json& rnd = j.at("random");
    o.random.evaluations = rnd.at("evaluations").get<std::size_t>();
    o.random.batch = rnd.at("batch").get<std::size_t>();
    o.random.seed = rnd.at("seed").get<std::uint64_t>();
    o.random.exhaustive = rnd.at("exhaustive").get<bool>();
    o.backend = descriptor_from_json(j.at("backend"));
    o.brute_cap = j.at("brute_cap").get<std::uint64_t>();
    o.compute_optimum = j.value("compute_optimum", true);
    return o;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed run options: ") + e.what());
  }
}

json build_manifest(const std::string& scenario_ref, const Scenario& scenario,
                    const SolveOptions& options) {
  return json{{"scenario", {{"ref", scenario_ref}, {"id", scenario.id},
                            {"definition", scenario_to_json(scenario)}}},
              {"options", options_to_json(options)}};
}

void write_json(const json& j, const std::filesystem::path& path) {
  write_text(j.dump(2) + "\n", path);
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mecopt
