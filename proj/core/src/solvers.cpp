#include "mecopt/solvers.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "mecopt/errors.hpp"
#include "rng.hpp"

namespace mecopt {
namespace {

std::string budget_message(std::uint64_t required, std::uint64_t cap) {
  const std::string need = required == 0 ? std::string("more than 2^64") : std::to_string(required);
  return "brute force needs " + need + " evaluations but the cap is " + std::to_string(cap) +
         "; raise the cap or use a heuristic method";
}

Allocation random_allocation(detail::Rng& rng, std::size_t m, std::size_t n) {
  std::vector<std::uint32_t> a(n);
  for (auto& s : a) s = static_cast<std::uint32_t>(rng.below(m));
  return Allocation(m, std::move(a));
}

struct Member {
  Allocation alloc;
  Objective obj;
};

}  // namespace

BudgetExceeded::BudgetExceeded(std::uint64_t required, std::uint64_t cap)
    : std::runtime_error(budget_message(required, cap)), required_(required), cap_(cap) {}

BruteForceResult brute_force(const LatencyMatrix& latency, std::uint64_t cap) {
  const std::size_t m = latency.num_servers();
  const std::size_t n = latency.num_users();
  const auto space = index_space_size(m, n);
  if (!space || *space > cap) throw BudgetExceeded(space.value_or(0), cap);

  // Odometer over digits; user 0 is the most significant, so the visiting
  // order matches encode_index().
  std::vector<std::uint32_t> digits(n, 0);
  std::vector<double> loads(m);
  std::optional<BruteForceResult> best;
  Objective cur;
  for (std::uint64_t s = 0; s < *space; ++s) {
    std::fill(loads.begin(), loads.end(), 0.0);
    for (std::size_t a = 0; a < n; ++a) loads[digits[a]] += latency(digits[a], a);
    cur.per_server_loads = loads;
    cur.max_latency_s = *std::max_element(loads.begin(), loads.end());
    if (!best || better(cur, best->objective)) {
      best = BruteForceResult{Allocation(m, digits), cur, 0};
    }
    for (std::size_t k = n; k-- > 0;) {
      if (++digits[k] < m) break;
      digits[k] = 0;
    }
  }
  best->evaluated = *space;
  return *best;
}

void GAConfig::validate() const {
  if (population_per_iter < 2) throw ValidationError("GA population must be >= 2");
  if (iterations < 1) throw ValidationError("GA iterations must be >= 1");
  if (mutation_rate && !(*mutation_rate >= 0.0 && *mutation_rate <= 1.0)) {
    throw ValidationError("GA mutation rate must lie in [0, 1]");
  }
  if (tournament_size < 1) throw ValidationError("GA tournament size must be >= 1");
  if (elitism > population_per_iter) throw ValidationError("GA elitism exceeds population");
}

Trajectory ga_run(const LatencyMatrix& latency, const GAConfig& cfg) {
  cfg.validate();
  const std::size_t m = latency.num_servers();
  const std::size_t n = latency.num_users();
  const double mutation = cfg.mutation_rate.value_or(1.0 / static_cast<double>(n));
  detail::Rng rng(cfg.seed);
  TrajectoryBuilder out("ga", m, n);

  auto by_rank = [](const Member& a, const Member& b) { return better(a.obj, b.obj); };

  std::vector<Member> population;
  population.reserve(cfg.population_per_iter);
  out.begin_iteration();
  for (std::size_t k = 0; k < cfg.population_per_iter; ++k) {
    Allocation a = random_allocation(rng, m, n);
    Objective o = objective(a, latency);
    out.add(a, o);
    population.push_back({std::move(a), std::move(o)});
  }
  out.end_iteration();

  auto tournament = [&]() -> const Member& {
    const Member* winner = &population[rng.below(population.size())];
    for (std::size_t k = 1; k < cfg.tournament_size; ++k) {
      const Member& challenger = population[rng.below(population.size())];
      if (better(challenger.obj, winner->obj)) winner = &challenger;
    }
    return *winner;
  };

  for (std::size_t gen = 2; gen <= cfg.iterations; ++gen) {
    std::stable_sort(population.begin(), population.end(), by_rank);
    std::vector<Member> next(population.begin(),
                             population.begin() + static_cast<std::ptrdiff_t>(cfg.elitism));
    out.begin_iteration();
    for (const Member& e : next) out.add(e.alloc, e.obj);
    while (next.size() < cfg.population_per_iter) {
      const Member& mother = tournament();
      const Member& father = tournament();
      std::vector<std::uint32_t> child(n);
      for (std::size_t a = 0; a < n; ++a) {
        child[a] = rng.bernoulli(0.5) ? mother.alloc.server_of(a) : father.alloc.server_of(a);
        if (mutation > 0.0 && rng.bernoulli(mutation)) {
          child[a] = static_cast<std::uint32_t>(rng.below(m));
        }
      }
      Allocation a(m, std::move(child));
      Objective o = objective(a, latency);
      out.add(a, o);
      next.push_back({std::move(a), std::move(o)});
    }
    out.end_iteration();
    population = std::move(next);
  }
  return std::move(out).finish(StopReason::iteration_cap);
}

Trajectory random_search(const LatencyMatrix& latency, const RandomSearchConfig& cfg) {
  if (cfg.evaluations < 1) throw ValidationError("random search needs at least one evaluation");
  if (cfg.batch < 1) throw ValidationError("random search batch must be >= 1");
  const std::size_t m = latency.num_servers();
  const std::size_t n = latency.num_users();
  detail::Rng rng(cfg.seed);
  TrajectoryBuilder out("random", m, n);

  std::vector<std::uint64_t> order;
  if (cfg.exhaustive) {
    const auto space = index_space_size(m, n);
    if (!space || cfg.evaluations > *space) {
      throw ValidationError("exhaustive random search asks for more evaluations than M^N");
    }
    if (*space > kDefaultBruteForceCap) throw BudgetExceeded(*space, kDefaultBruteForceCap);
    order.resize(*space);
    std::iota(order.begin(), order.end(), std::uint64_t{0});
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
  }

  for (std::size_t e = 0; e < cfg.evaluations; ++e) {
    if (e % cfg.batch == 0) out.begin_iteration();
    Allocation a = cfg.exhaustive ? decode_index(AllocationIndex{order[e]}, m, n)
                                  : random_allocation(rng, m, n);
    out.add(a, objective(a, latency));
  }
  return std::move(out).finish(StopReason::iteration_cap);
}

}  // namespace mecopt
