#pragma once

// Scenario files. Either a literal latency matrix or a physical instance
// description that is expanded through the network model:
//   {"matrix": [[...], ...]}                       row = server, column = user
//   {"physical": {"params": {...}, "M": 3, "N": 6, "seed": 1}}

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "mecopt/netmodel.hpp"

namespace mecopt {

struct PhysicalSpec {
  SimulationParams params;
  std::size_t num_servers = 0;
  std::size_t num_users = 0;
  std::uint64_t seed = 0;
};

struct Scenario {
  std::string id;
  std::optional<LatencyMatrix> literal;
  std::optional<PhysicalSpec> physical;

  static Scenario from_matrix(std::string id, LatencyMatrix matrix);
  static Scenario from_physical(std::string id, PhysicalSpec spec);

  // Literal matrix, or latency_matrix(generate_instance(...)).
  LatencyMatrix matrix() const;
};

nlohmann::json params_to_json(const SimulationParams& params);
// Missing keys keep their defaults; unknown keys are rejected.
SimulationParams params_from_json(const nlohmann::json& j);

nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

Scenario read_scenario(const std::filesystem::path& path);
void write_scenario(const Scenario& scenario, const std::filesystem::path& path);

// Whitespace separated numbers, one server per line; blank lines and '#'
// comments are skipped.
LatencyMatrix parse_matrix_text(const std::string& text);

// The balanced and imbalanced 3x3 reference matrices, and a seeded 3x6 physical
// instance used for convergence runs (synthetic data).
LatencyMatrix reference_matrix_balanced();
LatencyMatrix reference_matrix_imbalanced();
Scenario default_convergence_scenario();

}  // namespace mecopt
