#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "mecopt/errors.hpp"
#include "mecopt/harness.hpp"
#include "mecopt/plot.hpp"
#include "mecopt/scenario.hpp"

namespace mecopt::cli {
namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenFlags {
  std::optional<std::size_t> servers;
  std::optional<std::size_t> users;
  std::uint64_t seed = 0;
  std::string out;
  std::string matrix_file;
  std::string id;
  SimulationParams params;
};

// Flags shared by solve and compare.
struct RunFlags {
  std::string scenario;
  std::string backend = "heuristic";
  std::string script;
  std::string endpoint = kDefaultEndpoint;
  std::string model = "gpt-4o-mini";
  std::string credential_env = kDefaultCredentialEnv;
  std::string system_prompt;
  double temperature = 1.0;
  std::optional<double> threshold_s;
  std::optional<std::size_t> iterations;
  std::size_t population = 5;
  std::size_t candidates = 5;
  std::size_t nshot = kDefaultNShotCapacity;
  std::size_t retries = 3;
  std::uint64_t seed = 0;
  std::size_t evaluations = 250;
  bool exhaustive = false;
  std::optional<double> mutation_rate;
  std::size_t elitism = 1;
  std::size_t tournament = 2;
  std::size_t pool = 10;
  std::size_t prelim = 5;
  std::size_t select = 3;
  std::size_t continue_iters = 15;
  std::uint64_t brute_cap = kDefaultBruteForceCap;
  std::size_t max_in_flight = 4;
  std::string out_dir = ".";
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--scenario", f.scenario, "Scenario JSON file")->required();
  app->add_option("--backend", f.backend, "LLM backend: heuristic|scripted|live")
      ->check(CLI::IsMember({"heuristic", "scripted", "live"}));
  app->add_option("--script", f.script, "Canned replies for the scripted backend");
  app->add_option("--endpoint", f.endpoint, "OpenAI-compatible base URL");
  app->add_option("--model", f.model, "Model identifier");
  app->add_option("--credential-env", f.credential_env,
                  "Environment variable holding the API key");
  app->add_option("--system-prompt", f.system_prompt, "Optional system message");
  app->add_option("--temperature", f.temperature)->check(CLI::NonNegativeNumber);
  app->add_option("--threshold-s", f.threshold_s, "Stop once best latency falls below this")
      ->check(CLI::PositiveNumber);
  app->add_option("--iters,--max-iters", f.iterations,
                  "Iterations (GA generations or loop iterations)")
      ->check(CLI::PositiveNumber);
  app->add_option("--pop", f.population, "GA population per iteration")->check(CLI::Range(2, 1 << 20));
  app->add_option("--candidates", f.candidates, "Candidates requested per LLM iteration")
      ->check(CLI::PositiveNumber);
  app->add_option("--nshot", f.nshot, "N-shot buffer capacity")->check(CLI::PositiveNumber);
  app->add_option("--retries", f.retries, "Re-prompts after an unusable reply");
  app->add_option("--seed", f.seed, "Seed for every stochastic component");
  app->add_option("--evals", f.evaluations, "Random-search evaluations")->check(CLI::PositiveNumber);
  app->add_flag("--exhaustive", f.exhaustive, "Random search without replacement");
  app->add_option("--mutation-rate", f.mutation_rate, "GA per-user mutation probability")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--elitism", f.elitism, "GA elite count");
  app->add_option("--tournament", f.tournament, "GA tournament size")->check(CLI::PositiveNumber);
  app->add_option("--pool", f.pool, "Multi-agent pool size")->check(CLI::PositiveNumber);
  app->add_option("--prelim", f.prelim, "Multi-agent preliminary iterations")
      ->check(CLI::PositiveNumber);
  app->add_option("--select", f.select, "Agents kept after the preliminary phase")
      ->check(CLI::PositiveNumber);
  app->add_option("--continue-iters", f.continue_iters, "Multi-agent continuation iterations");
  app->add_option("--brute-cap", f.brute_cap, "Largest M^N brute force will enumerate");
  app->add_option("--max-in-flight", f.max_in_flight, "Concurrent live requests")
      ->check(CLI::Range(1, 1024));
  app->add_option("--out-dir", f.out_dir, "Directory for output files");
}

SolveOptions options_from(const RunFlags& f) {
  SolveOptions o;
  o.backend.kind = backend_kind_from_string(f.backend);
  if (o.backend.kind == BackendKind::live) {
    o.backend.endpoint = f.endpoint;
    o.backend.credential_env = f.credential_env;
    o.backend.max_in_flight = f.max_in_flight;
  } else if (o.backend.kind == BackendKind::scripted) {
    if (f.script.empty()) throw UsageError("--backend scripted requires --script");
    o.backend.script_path = f.script;
  }
  o.ga.population_per_iter = f.population;
  o.ga.mutation_rate = f.mutation_rate;
  o.ga.elitism = f.elitism;
  o.ga.tournament_size = f.tournament;
  if (f.iterations) {
    o.ga.iterations = *f.iterations;
    o.loop.max_iterations = *f.iterations;
  }
  o.loop.latency_threshold_s = f.threshold_s;
  o.loop.candidates_per_iteration = f.candidates;
  o.loop.reprompt_retries = f.retries;
  o.loop.nshot_capacity = f.nshot;
  o.loop.model_id = f.model;
  o.loop.temperature = f.temperature;
  o.loop.system_text = f.system_prompt;
  o.multi.pool_size = f.pool;
  o.multi.preliminary_iterations = f.prelim;
  o.multi.selected_agents = f.select;
  o.multi.continuation_iterations = f.continue_iters;
  o.multi.loop = o.loop;
  o.random.evaluations = f.evaluations;
  o.random.batch = f.candidates;
  o.random.exhaustive = f.exhaustive;
  o.brute_cap = f.brute_cap;
  o.set_seed(f.seed);
  o.ga.validate();
  o.loop.validate();
  return o;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ValidationError("cannot create output directory " + dir);
}

std::string describe(const RunSummary& s) {
  std::ostringstream os;
  os << s.method << " on " << s.scenario_id << ": best ";
  if (s.best_objective_s) os << *s.best_objective_s << " s"; else os << "n/a";
  if (s.optimum_s) os << ", optimum " << *s.optimum_s << " s";
  if (s.optimality_gap_s) os << ", gap " << *s.optimality_gap_s << " s";
  os << ", evaluations " << s.total_evaluations;
  if (s.iterations_to_best) os << ", iterations-to-best " << *s.iterations_to_best;
  if (s.partial) os << " [PARTIAL: " << s.error.value_or("unknown failure") << "]";
  return os.str();
}

int cmd_gen(const GenFlags& f, std::ostream& out) {
  Scenario scenario;
  if (!f.matrix_file.empty()) {
    if (f.servers || f.users) throw UsageError("--matrix-file cannot be combined with --M/--N");
    scenario = Scenario::from_matrix(f.id.empty() ? fs::path(f.matrix_file).stem().string() : f.id,
                                     parse_matrix_text(read_text(f.matrix_file)));
  } else {
    if (!f.servers || !f.users) throw UsageError("gen requires --M and --N (or --matrix-file)");
    PhysicalSpec spec;
    spec.params = f.params;
    spec.num_servers = *f.servers;
    spec.num_users = *f.users;
    spec.seed = f.seed;
    const std::string id = f.id.empty() ? "physical-" + std::to_string(*f.servers) + "x" +
                                              std::to_string(*f.users) + "-seed" +
                                              std::to_string(f.seed)
                                        : f.id;
    scenario = Scenario::from_physical(id, spec);
  }
  const std::string text = scenario_to_json(scenario).dump(2) + "\n";
  if (f.out.empty()) {
    out << text;
  } else {
    write_text(text, f.out);
    out << "wrote " << f.out << '\n';
  }
  return kExitOk;
}

void write_trajectory_files(const Trajectory& t, const fs::path& stem) {
  write_trajectory_csv(t, stem.string() + ".csv");
  write_trajectory_json(t, stem.string() + ".json");
}

int cmd_solve(const RunFlags& f, const std::string& method_name, std::ostream& out,
              std::ostream& err) {
  const Scenario scenario = read_scenario(f.scenario);
  SolveOptions options = options_from(f);
  options.method = method_from_string(method_name);
  ensure_dir(f.out_dir);
  const fs::path dir(f.out_dir);

  write_json(build_manifest(f.scenario, scenario, options), dir / "manifest.json");
  const SolveOutput result = solve(scenario, options);
  if (result.trajectories.size() == 1) {
    write_trajectory_files(result.trajectories.front(), dir / "trajectory");
  } else {
    for (std::size_t k = 0; k < result.trajectories.size(); ++k) {
      write_trajectory_files(result.trajectories[k],
                             dir / ("trajectory_" + result.trajectories[k].method));
    }
  }
  write_json(summary_to_json(result.summary), dir / "summary.json");
  out << describe(result.summary) << '\n';
  if (result.backend_failed) {
    err << "backend failure; partial outputs written to " << dir.string() << '\n';
    return kExitBackend;
  }
  return kExitOk;
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> methods;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) methods.push_back(method_from_string(item));
  }
  if (methods.empty()) throw UsageError("--methods lists no methods");
  return methods;
}

int cmd_compare(const RunFlags& f, const std::string& methods, std::size_t trials,
                std::size_t jobs, std::ostream& out, std::ostream& err) {
  const Scenario scenario = read_scenario(f.scenario);
  const SolveOptions options = options_from(f);
  ensure_dir(f.out_dir);
  const fs::path dir(f.out_dir);
  write_json(build_manifest(f.scenario, scenario, options), dir / "manifest.json");

  const CompareResult r = compare(scenario, parse_methods(methods), trials, f.seed, options, jobs);
  write_text(comparison_to_csv(r), dir / "comparison.csv");
  write_json(comparison_to_json(r), dir / "comparison.json");
  out << "scenario " << r.scenario_id << ", optimum "
      << (r.optimum_s ? std::to_string(*r.optimum_s) : std::string("n/a")) << " s\n";
  for (const auto& a : r.aggregates) {
    out << a.method << ": optimal-rate " << a.optimal_rate << " (" << a.optimal << "/" << a.trials
        << ")";
    if (a.mean_iterations_to_best) out << ", mean iterations-to-best " << *a.mean_iterations_to_best;
    if (a.failed) out << ", failed " << a.failed;
    out << '\n';
  }
  if (r.any_backend_failure) {
    err << "one or more trials hit a backend failure\n";
    return kExitBackend;
  }
  return kExitOk;
}

int cmd_plot(const std::vector<std::string>& inputs, const std::vector<std::string>& labels,
             std::optional<std::size_t> servers, std::optional<std::size_t> users,
             const std::string& out_path, std::ostream& out, std::ostream& err) {
  std::vector<PlotSeries> series;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const fs::path p(inputs[k]);
    PlotSeries s;
    if (p.extension() == ".csv") {
      if (!servers || !users) throw UsageError("CSV trajectories need --M and --N");
      s.trajectory = trajectory_from_csv(read_text(p), p.stem().string(), *servers, *users);
      s.label = p.stem().string();
    } else {
      s.trajectory = read_trajectory_json(p);
      s.label = s.trajectory.method;
    }
    if (k < labels.size()) s.label = labels[k];
    series.push_back(std::move(s));
  }
  const PlotOutput plot = render_svg(series);
  for (const auto& w : plot.warnings) err << "warning: " << w << '\n';
  write_text(plot.svg, out_path);
  out << "wrote " << out_path << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mecopt: MEC task-allocation optimizer and experiment harness", "mecopt"};
  app.require_subcommand(1);

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a scenario file");
  gen_cmd->add_option("--M", gen.servers, "Number of MEC servers")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--N", gen.users, "Number of users")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Placement seed");
  gen_cmd->add_option("--out", gen.out, "Output path (stdout if omitted)");
  gen_cmd->add_option("--matrix-file", gen.matrix_file,
                      "Embed a literal latency matrix (rows = servers)")
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--id", gen.id, "Scenario identifier");
  gen_cmd->add_option("--bandwidth-hz", gen.params.bandwidth_hz);
  gen_cmd->add_option("--ap-power-w", gen.params.ap_tx_power_w);
  gen_cmd->add_option("--user-power-w", gen.params.user_tx_power_w);
  gen_cmd->add_option("--path-loss-exp", gen.params.path_loss_exponent);
  gen_cmd->add_option("--noise-dbm", gen.params.noise_power_dbm);
  gen_cmd->add_option("--cpu-hz", gen.params.mec_cpu_cycles_per_s);
  gen_cmd->add_option("--tx-bits", gen.params.tx_data_bits);
  gen_cmd->add_option("--rx-bits", gen.params.rx_data_bits);
  gen_cmd->add_option("--cycles-per-bit", gen.params.cycles_per_bit_coeff);
  gen_cmd->add_option("--area-m", gen.params.area_side_m);
  gen_cmd->add_flag("--fading", gen.params.rayleigh_fading, "Seeded Rayleigh fading");

  RunFlags solve_flags;
  std::string method;
  auto* solve_cmd = app.add_subcommand("solve", "Run one method on a scenario");
  add_run_flags(solve_cmd, solve_flags);
  solve_cmd->add_option("--method", method, "brute|ga|llm|multi|random")
      ->required()
      ->check(CLI::IsMember({"brute", "ga", "llm", "multi", "random"}));

  RunFlags compare_flags;
  compare_flags.seed = 1;
  std::string methods = "brute,ga,llm,random";
  std::size_t trials = 10;
  std::size_t jobs = 0;
  auto* compare_cmd = app.add_subcommand("compare", "Compare methods over seeded trials");
  add_run_flags(compare_cmd, compare_flags);
  compare_cmd->add_option("--methods", methods, "Comma separated methods");
  compare_cmd->add_option("--trials", trials, "Trials per method")->check(CLI::PositiveNumber);
  compare_cmd->add_option("--jobs", jobs, "Concurrent trials (0 = hardware)");

  std::vector<std::string> plot_inputs;
  std::vector<std::string> plot_labels;
  std::string plot_out;
  std::optional<std::size_t> plot_servers;
  std::optional<std::size_t> plot_users;
  auto* plot_cmd = app.add_subcommand("plot", "Render trajectories to SVG");
  plot_cmd->add_option("--in", plot_inputs, "Trajectory files (.json or .csv)")
      ->required()
      ->check(CLI::ExistingFile);
  plot_cmd->add_option("--label", plot_labels, "Series labels, in --in order");
  plot_cmd->add_option("--out", plot_out, "SVG output path")->required();
  plot_cmd->add_option("--M", plot_servers, "Servers (CSV inputs only)");
  plot_cmd->add_option("--N", plot_users, "Users (CSV inputs only)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*solve_cmd) return cmd_solve(solve_flags, method, out, err);
    if (*compare_cmd) return cmd_compare(compare_flags, methods, trials, jobs, out, err);
    if (*plot_cmd) {
      return cmd_plot(plot_inputs, plot_labels, plot_servers, plot_users, plot_out, out, err);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const BackendError& e) {
    err << "backend error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.kind() == BackendError::Kind::configuration ? kExitUsage : kExitBackend;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace mecopt::cli
