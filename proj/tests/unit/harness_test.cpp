#include <regex>
#include <set>

#include <gtest/gtest.h>

#include "mecopt/errors.hpp"
#include "mecopt/harness.hpp"
#include "mecopt/plot.hpp"
#include "mecopt/scenario.hpp"

namespace mecopt {
namespace {

Scenario balanced() { return Scenario::from_matrix("balanced", reference_matrix_balanced()); }

SolveOptions opts(Method m, std::uint64_t seed) {
  SolveOptions o;
  o.method = m;
  o.backend.kind = BackendKind::heuristic;
  o.set_seed(seed);
  return o;
}

RunSummary timeless(RunSummary s) {
  s.wall_time_s = 0.0;
  return s;
}

TEST(Solve, BruteForceSummary) {
  const auto out = solve(balanced(), opts(Method::brute, 1));
  EXPECT_NEAR(*out.summary.best_objective_s, 0.126, 1e-12);
  EXPECT_EQ(out.summary.total_evaluations, 27u);
  EXPECT_EQ(*out.summary.best_allocation_index, encode_index(Allocation(3, {2, 0, 1})).value);
  EXPECT_TRUE(out.summary.is_optimal());
  EXPECT_EQ(*out.summary.optimality_gap_s, 0.0);
  ASSERT_EQ(out.trajectories.size(), 1u);
}

TEST(Solve, EveryMethodIsDeterministicPerSeed) {
  for (Method m : {Method::ga, Method::llm, Method::multi, Method::random}) {
    const auto a = solve(balanced(), opts(m, 3));
    const auto b = solve(balanced(), opts(m, 3));
    EXPECT_EQ(timeless(a.summary), timeless(b.summary)) << to_string(m);
    EXPECT_EQ(a.trajectories, b.trajectories) << to_string(m);
    for (const auto& t : a.trajectories) {
      EXPECT_NO_THROW(check_trajectory(t));
      for (auto idx : t.visited()) EXPECT_LE(idx.value, 26u);
    }
  }
}

TEST(Solve, GaEvaluationBudget) {
  auto o = opts(Method::ga, 42);
  o.ga.iterations = 50;
  o.ga.population_per_iter = 5;
  EXPECT_EQ(solve(balanced(), o).summary.total_evaluations, 250u);
}

TEST(Solve, BackendFailureIsPartial) {
  auto o = opts(Method::llm, 1);
  o.backend.kind = BackendKind::scripted;
  const auto path = std::filesystem::temp_directory_path() / "mecopt_harness_script.txt";
  write_text("Allocation: [1, 1, 1]\n", path);
  o.backend.script_path = path;
  const auto out = solve(balanced(), o);
  EXPECT_TRUE(out.backend_failed);
  EXPECT_TRUE(out.summary.partial);
  EXPECT_TRUE(out.summary.error.has_value());
  EXPECT_EQ(out.summary.total_evaluations, 1u);
  std::filesystem::remove(path);
}

TEST(Solve, OptimumSkippedWhenIntractable) {
  const auto big = Scenario::from_matrix("big", LatencyMatrix(4, 14, std::vector<double>(56, 0.5)));
  auto o = opts(Method::random, 1);
  o.brute_cap = 1000;
  const auto out = solve(big, o);
  EXPECT_FALSE(out.summary.optimum_s.has_value());
  o.method = Method::brute;
  EXPECT_THROW(solve(big, o), BudgetExceeded);
}

TEST(SummaryJson, RoundTrip) {
  const auto s = solve(balanced(), opts(Method::llm, 7)).summary;
  EXPECT_EQ(summary_from_json(summary_to_json(s)), s);
}

TEST(Compare, TrialsSeededInOrderAndAggregated) {
  const auto r = compare(balanced(), {Method::brute, Method::random}, 4, 10, opts(Method::llm, 0), 2);
  ASSERT_EQ(r.trials.size(), 8u);
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_EQ(r.trials[k].method, k < 4 ? "brute" : "random");
    EXPECT_EQ(r.trials[k].trial, k % 4);
    EXPECT_EQ(r.trials[k].seed, 10 + k % 4);
  }
  ASSERT_EQ(r.aggregates.size(), 2u);
  EXPECT_EQ(r.aggregates[0].optimal, 4u);
  EXPECT_DOUBLE_EQ(r.aggregates[0].optimal_rate, 1.0);
  EXPECT_NEAR(*r.optimum_s, 0.126, 1e-12);
  const auto serial = compare(balanced(), {Method::brute, Method::random}, 4, 10, opts(Method::llm, 0), 1);
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_EQ(timeless(serial.trials[k].summary), timeless(r.trials[k].summary));
  }
  const auto csv = comparison_to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "method,trial,seed,best_s,optimum_s,gap_s,optimal,iterations_to_best,"
            "total_evaluations,error");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  EXPECT_EQ(comparison_to_json(r).at("trials").size(), 8u);
}

TEST(Manifest, RecordsVariableNameOnly) {
  ::setenv("MECOPT_TEST_MANIFEST_KEY", "sk-manifest-SECRET", 1);
  auto o = opts(Method::llm, 5);
  o.backend.kind = BackendKind::live;
  o.backend.endpoint = "https://example.invalid/v1";
  o.backend.credential_env = "MECOPT_TEST_MANIFEST_KEY";
  const auto m = build_manifest("balanced.json", balanced(), o);
  const auto text = m.dump();
  EXPECT_EQ(text.find("sk-manifest-SECRET"), std::string::npos);
  EXPECT_NE(text.find("MECOPT_TEST_MANIFEST_KEY"), std::string::npos);
  const auto back = options_from_json(options_to_json(o));
  EXPECT_EQ(options_to_json(back), options_to_json(o));
  EXPECT_EQ(descriptor_from_json(descriptor_to_json(o.backend)).credential_env,
            "MECOPT_TEST_MANIFEST_KEY");
  ::unsetenv("MECOPT_TEST_MANIFEST_KEY");
}

TEST(Plot, TwoLabeledSeriesWithIndexMarkers) {
  const auto llm = solve(balanced(), opts(Method::llm, 7)).trajectories.at(0);
  const auto ga = solve(balanced(), opts(Method::ga, 7)).trajectories.at(0);
  const auto out = render_svg({{"LLM", llm}, {"GA", ga}});
  EXPECT_TRUE(out.warnings.empty());
  EXPECT_EQ(out.svg.rfind("<svg", 0), 0u);
  EXPECT_NE(out.svg.find("data-label=\"LLM\""), std::string::npos);
  EXPECT_NE(out.svg.find("data-label=\"GA\""), std::string::npos);
  std::size_t legends = 0;
  for (std::size_t p = out.svg.find("class=\"legend\""); p != std::string::npos;
       p = out.svg.find("class=\"legend\"", p + 1)) {
    ++legends;
  }
  EXPECT_EQ(legends, 2u);
  const std::regex idx(R"re(class="index"[^>]*data-index="(\d+)")re");
  std::size_t markers = 0;
  for (std::sregex_iterator it(out.svg.begin(), out.svg.end(), idx), end; it != end; ++it) {
    EXPECT_LE(std::stoull((*it)[1]), 26u);
    ++markers;
  }
  EXPECT_EQ(markers, llm.total_evaluations + ga.total_evaluations);
  EXPECT_EQ(render_svg({{"LLM", llm}, {"GA", ga}}).svg, out.svg);
}

TEST(Plot, EmptyInputRendersPlaceholder) {
  const auto out = render_svg({});
  EXPECT_FALSE(out.warnings.empty());
  EXPECT_NE(out.svg.find("no data to plot"), std::string::npos);
  TrajectoryBuilder b("empty", 3, 3);
  b.begin_iteration();
  b.end_iteration();
  const auto out2 = render_svg({{"x", std::move(b).finish(StopReason::iteration_cap)}});
  EXPECT_FALSE(out2.warnings.empty());
}

TEST(MethodText, RoundTrips) {
  for (Method m : {Method::brute, Method::ga, Method::llm, Method::multi, Method::random}) {
    EXPECT_EQ(method_from_string(to_string(m)), m);
  }
  EXPECT_THROW(method_from_string("sgd"), ValidationError);
}

}  // namespace
}  // namespace mecopt
