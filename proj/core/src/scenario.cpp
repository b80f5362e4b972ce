#include "mecopt/scenario.hpp"

#include <fstream>
#include <sstream>

#include "mecopt/errors.hpp"

namespace mecopt {

using nlohmann::json;

Scenario Scenario::from_matrix(std::string id, LatencyMatrix matrix) {
  Scenario s;
  s.id = std::move(id);
  s.literal = std::move(matrix);
  return s;
}

Scenario Scenario::from_physical(std::string id, PhysicalSpec spec) {
  spec.params.validate();
  if (spec.num_servers == 0 || spec.num_users == 0) {
    throw ValidationError("physical scenario requires M >= 1 and N >= 1");
  }
  Scenario s;
  s.id = std::move(id);
  s.physical = std::move(spec);
  return s;
}

LatencyMatrix Scenario::matrix() const {
  if (literal) return *literal;
  if (physical) {
    return latency_matrix(generate_instance(physical->params, physical->num_servers,
                                            physical->num_users, physical->seed));
  }
  throw ContractViolation("scenario has neither a matrix nor a physical description");
}

json params_to_json(const SimulationParams& p) {
  return json{{"bandwidth_hz", p.bandwidth_hz},
              {"ap_tx_power_w", p.ap_tx_power_w},
              {"user_tx_power_w", p.user_tx_power_w},
              {"path_loss_exponent", p.path_loss_exponent},
              {"noise_power_dbm", p.noise_power_dbm},
              {"mec_cpu_cycles_per_s", p.mec_cpu_cycles_per_s},
              {"tx_data_bits", p.tx_data_bits},
              {"rx_data_bits", p.rx_data_bits},
              {"cycles_per_bit_coeff", p.cycles_per_bit_coeff},
              {"area_side_m", p.area_side_m},
              {"rayleigh_fading", p.rayleigh_fading}};
}

SimulationParams params_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("\"params\" must be an object");
  SimulationParams p;
  for (const auto& [key, value] : j.items()) {
    auto number = [&]() -> double {
      if (!value.is_number()) throw ValidationError("param \"" + key + "\" must be a number");
      return value.get<double>();
    };
    if (key == "bandwidth_hz") p.bandwidth_hz = number();
    else if (key == "ap_tx_power_w") p.ap_tx_power_w = number();
    else if (key == "user_tx_power_w") p.user_tx_power_w = number();
    else if (key == "path_loss_exponent") p.path_loss_exponent = number();
    else if (key == "noise_power_dbm") p.noise_power_dbm = number();
    else if (key == "mec_cpu_cycles_per_s") p.mec_cpu_cycles_per_s = number();
    else if (key == "tx_data_bits") p.tx_data_bits = number();
    else if (key == "rx_data_bits") p.rx_data_bits = number();
    else if (key == "cycles_per_bit_coeff") p.cycles_per_bit_coeff = number();
    else if (key == "area_side_m") p.area_side_m = number();
    else if (key == "rayleigh_fading") {
      if (!value.is_boolean()) throw ValidationError("param \"rayleigh_fading\" must be a boolean");
      p.rayleigh_fading = value.get<bool>();
    } else {
      throw ValidationError("unknown simulation parameter \"" + key + "\"");
    }
  }
  p.validate();
  return p;
}

json scenario_to_json(const Scenario& s) {
  json j;
  if (!s.id.empty()) j["id"] = s.id;
  if (s.literal) {
    j["matrix"] = s.literal->rows();
  } else if (s.physical) {
    j["physical"] = json{{"params", params_to_json(s.physical->params)},
                         {"M", s.physical->num_servers},
                         {"N", s.physical->num_users},
                         {"seed", s.physical->seed}};
  } else {
    throw ContractViolation("scenario has neither a matrix nor a physical description");
  }
  return j;
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
  const std::string id = j.value("id", std::string{});
  const bool has_matrix = j.contains("matrix");
  const bool has_physical = j.contains("physical");
  if (has_matrix == has_physical) {
    throw ValidationError("scenario must contain exactly one of \"matrix\" or \"physical\"");
  }
  try {
    if (has_matrix) {
      return Scenario::from_matrix(
          id, LatencyMatrix::from_rows(j.at("matrix").get<std::vector<std::vector<double>>>()));
    }
    const json& ph = j.at("physical");
    PhysicalSpec spec;
    spec.params = ph.contains("params") ? params_from_json(ph.at("params")) : SimulationParams{};
    spec.num_servers = ph.at("M").get<std::size_t>();
    spec.num_users = ph.at("N").get<std::size_t>();
    spec.seed = ph.value("seed", std::uint64_t{0});
    return Scenario::from_physical(id, spec);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed scenario: ") + e.what());
  }
}

Scenario read_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("scenario file " + path.string() + " is not valid JSON: " + e.what());
  }
  Scenario s = scenario_from_json(j);
  if (s.id.empty()) s.id = path.stem().string();
  return s;
}

void write_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write scenario file " + path.string());
  out << scenario_to_json(scenario).dump(2) << '\n';
  if (!out) throw ValidationError("failed writing scenario file " + path.string());
}

LatencyMatrix parse_matrix_text(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '[' || c == ']') c = ' ';
    }
    std::istringstream cells(line);
    std::vector<double> row;
    std::string token;
    while (cells >> token) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) throw ValidationError("matrix text: bad number \"" + token + "\"");
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return LatencyMatrix::from_rows(rows);
}

LatencyMatrix reference_matrix_balanced() {
  return LatencyMatrix::from_rows({{0.257, 0.101, 0.199},
                                   {0.137, 0.108, 0.061},
                                   {0.126, 0.065, 0.102}});
}

LatencyMatrix reference_matrix_imbalanced() {
  return LatencyMatrix::from_rows({{0.264, 0.291, 0.078},
                                   {0.292, 0.330, 0.084},
                                   {0.104, 0.165, 0.149}});
}

Scenario default_convergence_scenario() {
  PhysicalSpec spec;
  spec.num_servers = 3;
  spec.num_users = 6;
  spec.seed = 1;
  return Scenario::from_physical("seeded-3x6", spec);
}

}  // namespace mecopt
