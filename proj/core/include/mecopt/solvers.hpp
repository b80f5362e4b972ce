#pragma once

// Reference solvers: exhaustive enumeration (exact), a genetic algorithm
// baseline and uniform random search.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "mecopt/assignment.hpp"
#include "mecopt/trajectory.hpp"

namespace mecopt {

inline constexpr std::uint64_t kDefaultBruteForceCap = 10'000'000;

class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::uint64_t required, std::uint64_t cap);
  // 0 when M^N overflows 64 bits.
  std::uint64_t required() const { return required_; }
  std::uint64_t cap() const { return cap_; }

 private:
  std::uint64_t required_;
  std::uint64_t cap_;
};

struct BruteForceResult {
  Allocation allocation;
  Objective objective;
  std::uint64_t evaluated = 0;
};

// Enumerates all M^N allocations in index order and keeps the first one that
// no later allocation beats under better(). Throws BudgetExceeded when M^N
// exceeds the cap.
BruteForceResult brute_force(const LatencyMatrix& latency,
                             std::uint64_t cap = kDefaultBruteForceCap);

struct GAConfig {
  std::size_t population_per_iter = 5;
  std::size_t iterations = 50;
  // Per-user mutation probability; unset means 1/N.
  std::optional<double> mutation_rate;
  std::size_t tournament_size = 2;
  std::size_t elitism = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Generation 1 is a uniform random population. Each later generation keeps
// the `elitism` best members and fills the rest with offspring from
// tournament selection, per-user uniform crossover and per-user mutation.
// Every member of every generation is recorded as a candidate, so the
// trajectory holds iterations * population_per_iter evaluations.
Trajectory ga_run(const LatencyMatrix& latency, const GAConfig& cfg);

struct RandomSearchConfig {
  std::size_t evaluations = 250;
  std::size_t batch = 5;  // candidates per trajectory iteration
  std::uint64_t seed = 0;
  // Sample without replacement (seeded permutation of the index space);
  // evaluations must not exceed M^N.
  bool exhaustive = false;
};

Trajectory random_search(const LatencyMatrix& latency, const RandomSearchConfig& cfg);

}  // namespace mecopt
