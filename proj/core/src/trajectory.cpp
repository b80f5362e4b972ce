#include "mecopt/trajectory.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mecopt/errors.hpp"

namespace mecopt {

using nlohmann::json;

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::iteration_cap: return "iteration_cap";
    case StopReason::threshold: return "threshold";
    case StopReason::backend_failure: return "backend_failure";
    case StopReason::exhausted: return "exhausted";
  }
  return "unknown";
}

StopReason stop_reason_from_string(const std::string& text) {
  if (text == "iteration_cap") return StopReason::iteration_cap;
  if (text == "threshold") return StopReason::threshold;
  if (text == "backend_failure") return StopReason::backend_failure;
  if (text == "exhausted") return StopReason::exhausted;
  throw ValidationError("unknown stop reason \"" + text + "\"");
}

std::optional<Candidate> Trajectory::best() const {
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    if (it->best_so_far) return it->best_so_far;
  }
  return std::nullopt;
}

std::optional<std::size_t> Trajectory::iterations_to_best() const {
  const auto final_best = best();
  if (!final_best) return std::nullopt;
  for (const auto& r : records) {
    if (r.best_so_far && r.best_so_far->objective_s == final_best->objective_s) return r.iteration;
  }
  return std::nullopt;
}

std::vector<AllocationIndex> Trajectory::visited() const {
  std::vector<AllocationIndex> out;
  out.reserve(total_evaluations);
  for (const auto& r : records) {
    for (const auto& c : r.candidates) out.push_back(c.index);
  }
  return out;
}

void check_trajectory(const Trajectory& t) {
  const auto space = index_space_size(t.num_servers, t.num_users);
  if (!space || t.num_servers == 0 || t.num_users == 0) {
    throw ContractViolation("trajectory has invalid dimensions");
  }
  std::size_t count = 0;
  std::optional<double> best;
  double min_seen = 0.0;
  bool seen_any = false;
  for (std::size_t k = 0; k < t.records.size(); ++k) {
    const auto& r = t.records[k];
    if (r.iteration != k + 1) {
      throw ContractViolation("trajectory iteration " + std::to_string(k + 1) + " is numbered " +
                              std::to_string(r.iteration));
    }
    for (const auto& c : r.candidates) {
      if (c.index.value >= *space) {
        throw ContractViolation("candidate index " + std::to_string(c.index.value) +
                                " outside the allocation space");
      }
      min_seen = seen_any ? std::min(min_seen, c.objective_s) : c.objective_s;
      seen_any = true;
    }
    count += r.candidates.size();
    if (r.best_so_far.has_value() != seen_any) {
      throw ContractViolation("iteration " + std::to_string(r.iteration) +
                              " best-so-far presence does not match candidates seen");
    }
    if (r.best_so_far) {
      if (best && r.best_so_far->objective_s > *best) {
        throw ContractViolation("best-so-far increased at iteration " +
                                std::to_string(r.iteration));
      }
      if (r.best_so_far->objective_s != min_seen) {
        throw ContractViolation("best-so-far at iteration " + std::to_string(r.iteration) +
                                " is not the minimum objective seen");
      }
      best = r.best_so_far->objective_s;
    }
  }
  if (count != t.total_evaluations) {
    throw ContractViolation("total_evaluations " + std::to_string(t.total_evaluations) +
                            " != candidate count " + std::to_string(count));
  }
}

TrajectoryBuilder::TrajectoryBuilder(std::string method, std::size_t num_servers,
                                     std::size_t num_users) {
  if (!index_space_size(num_servers, num_users)) {
    throw ContractViolation("allocation index space " + std::to_string(num_servers) + "^" +
                            std::to_string(num_users) + " exceeds 64 bits");
  }
  t_.method = std::move(method);
  t_.num_servers = num_servers;
  t_.num_users = num_users;
}

void TrajectoryBuilder::begin_iteration() {
  if (open_) end_iteration();
  IterationRecord r;
  r.iteration = t_.records.size() + 1;
  t_.records.push_back(std::move(r));
  open_ = true;
}

bool TrajectoryBuilder::add(const Allocation& alloc, const Objective& obj) {
  if (!open_) begin_iteration();
  const Candidate c{encode_index(alloc), obj.max_latency_s};
  t_.records.back().candidates.push_back(c);
  ++t_.total_evaluations;
  if (!best_obj_ || better(obj, *best_obj_)) {
    best_obj_ = obj;
    best_alloc_ = alloc;
    best_ = c;
    t_.records.back().best_so_far = best_;
    return true;
  }
  t_.records.back().best_so_far = best_;
  return false;
}

void TrajectoryBuilder::end_iteration() {
  if (!open_) return;
  t_.records.back().best_so_far = best_;
  open_ = false;
}

Trajectory TrajectoryBuilder::finish(StopReason reason) && {
  end_iteration();
  t_.stop_reason = reason;
  return std::move(t_);
}

namespace {

json candidate_json(const Candidate& c) {
  return json{{"allocation_index", c.index.value}, {"objective_s", c.objective_s}};
}

Candidate candidate_from(const json& j) {
  return Candidate{AllocationIndex{j.at("allocation_index").get<std::uint64_t>()},
                   j.at("objective_s").get<double>()};
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

json trajectory_to_json(const Trajectory& t) {
  json records = json::array();
  for (const auto& r : t.records) {
    json candidates = json::array();
    for (const auto& c : r.candidates) candidates.push_back(candidate_json(c));
    records.push_back(json{{"iteration", r.iteration},
                           {"candidates", std::move(candidates)},
                           {"best_so_far", r.best_so_far ? candidate_json(*r.best_so_far)
                                                         : json(nullptr)}});
  }
  return json{{"method", t.method},
              {"num_servers", t.num_servers},
              {"num_users", t.num_users},
              {"total_evaluations", t.total_evaluations},
              {"stop_reason", to_string(t.stop_reason)},
              {"records", std::move(records)}};
}

Trajectory trajectory_from_json(const json& j) {
  try {
    Trajectory t;
    t.method = j.at("method").get<std::string>();
    t.num_servers = j.at("num_servers").get<std::size_t>();
    t.num_users = j.at("num_users").get<std::size_t>();
    t.total_evaluations = j.at("total_evaluations").get<std::size_t>();
    t.stop_reason = stop_reason_from_string(j.value("stop_reason", std::string("iteration_cap")));
    for (const auto& jr : j.at("records")) {
      IterationRecord r;
      r.iteration = jr.at("iteration").get<std::size_t>();
      for (const auto& jc : jr.at("candidates")) r.candidates.push_back(candidate_from(jc));
      if (jr.contains("best_so_far") && !jr.at("best_so_far").is_null()) {
        r.best_so_far = candidate_from(jr.at("best_so_far"));
      }
      t.records.push_back(std::move(r));
    }
    check_trajectory(t);
    return t;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed trajectory JSON: ") + e.what());
  } catch (const ContractViolation& e) {
    throw ValidationError(std::string("inconsistent trajectory: ") + e.what());
  }
}

std::string trajectory_to_csv(const Trajectory& t) {
  std::ostringstream os;
  os << "iteration,candidate_rank,allocation_index,objective_s,best_so_far_s,best_so_far_index\n";
  for (const auto& r : t.records) {
    const std::string best_s = r.best_so_far ? fmt_double(r.best_so_far->objective_s) : "";
    const std::string best_i =
        r.best_so_far ? std::to_string(r.best_so_far->index.value) : std::string{};
    if (r.candidates.empty()) {
      os << r.iteration << ",,,," << best_s << ',' << best_i << '\n';
      continue;
    }
    for (std::size_t k = 0; k < r.candidates.size(); ++k) {
      os << r.iteration << ',' << k << ',' << r.candidates[k].index.value << ','
         << fmt_double(r.candidates[k].objective_s) << ',' << best_s << ',' << best_i << '\n';
    }
  }
  return os.str();
}

Trajectory trajectory_from_csv(const std::string& csv, std::string method,
                               std::size_t num_servers, std::size_t num_users) {
  Trajectory t;
  t.method = std::move(method);
  t.num_servers = num_servers;
  t.num_users = num_users;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("iteration,candidate_rank,allocation_index", 0) != 0) {
    throw ValidationError("trajectory CSV is missing its header");
  }
  std::size_t line_no = 1;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto cells = split_csv_line(line);
      if (cells.size() < 5) throw ValidationError("expected at least 5 columns");
      const std::size_t iteration = std::stoull(cells[0]);
      if (t.records.empty() || t.records.back().iteration != iteration) {
        IterationRecord r;
        r.iteration = iteration;
        t.records.push_back(std::move(r));
      }
      auto& r = t.records.back();
      if (!cells[2].empty()) {
        r.candidates.push_back(
            Candidate{AllocationIndex{std::stoull(cells[2])}, std::stod(cells[3])});
        ++t.total_evaluations;
      }
      if (!cells[4].empty()) {
        Candidate best{AllocationIndex{0}, std::stod(cells[4])};
        if (cells.size() > 5 && !cells[5].empty()) best.index.value = std::stoull(cells[5]);
        r.best_so_far = best;
      }
    }
  } catch (const ValidationError& e) {
    throw ValidationError("trajectory CSV line " + std::to_string(line_no) + ": " + e.what());
  } catch (const std::exception&) {
    throw ValidationError("trajectory CSV line " + std::to_string(line_no) + ": bad number");
  }
  try {
    check_trajectory(t);
  } catch (const ContractViolation& e) {
    throw ValidationError(std::string("inconsistent trajectory CSV: ") + e.what());
  }
  return t;
}

void write_trajectory_json(const Trajectory& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << trajectory_to_json(t).dump(2) << '\n';
}

Trajectory read_trajectory_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + " is not valid JSON: " + e.what());
  }
  return trajectory_from_json(j);
}

void write_trajectory_csv(const Trajectory& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << trajectory_to_csv(t);
}

}  // namespace mecopt
