#include "mecopt/prompting.hpp"

#include <cctype>
#include <cstdio>
#include <regex>
#include <sstream>

#include "mecopt/errors.hpp"

namespace mecopt {

using nlohmann::json;

ObservationBuffer::ObservationBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ValidationError("observation buffer capacity must be >= 1");
}

void ObservationBuffer::push(Observation obs) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(obs));
}

Observation record(ObservationBuffer& buffer, const Allocation& alloc,
                   const LatencyMatrix& latency, std::size_t iteration) {
  Observation obs{alloc, objective(alloc, latency).max_latency_s, iteration};
  buffer.push(obs);
  return obs;
}

json buffer_to_json(const ObservationBuffer& buffer) {
  json items = json::array();
  for (const auto& o : buffer.items()) {
    const auto s = o.allocation.servers_of_user();
    items.push_back(json{{"num_servers", o.allocation.num_servers()},
                         {"servers_of_user", std::vector<std::uint32_t>(s.begin(), s.end())},
                         {"objective_s", o.objective_s},
                         {"iteration_born", o.iteration_born}});
  }
  return json{{"capacity", buffer.capacity()}, {"observations", std::move(items)}};
}

ObservationBuffer buffer_from_json(const json& j, const LatencyMatrix& latency) {
  try {
    ObservationBuffer buffer(j.at("capacity").get<std::size_t>());
    for (const auto& item : j.at("observations")) {
      Allocation alloc(item.at("num_servers").get<std::size_t>(),
                       item.at("servers_of_user").get<std::vector<std::uint32_t>>());
      if (alloc.num_servers() != latency.num_servers() ||
          alloc.num_users() != latency.num_users()) {
        throw ValidationError("observation dimensions do not match the scenario");
      }
      const double stored = item.at("objective_s").get<double>();
      if (stored != objective(alloc, latency).max_latency_s) {
        throw ValidationError("stored objective " + std::to_string(stored) +
                              " does not match re-evaluation");
      }
      buffer.push(Observation{std::move(alloc), stored,
                              item.value("iteration_born", std::size_t{0})});
    }
    return buffer;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed buffer JSON: ") + e.what());
  }
}

std::string_view section_title(PromptSection s) {
  switch (s) {
    case PromptSection::solution_variable_definition: return "Solution variable definition";
    case PromptSection::constraint_enforcement: return "Constraint enforcement";
    case PromptSection::objective_description: return "Objective description";
    case PromptSection::network_parameter_input: return "Network parameter input";
    case PromptSection::nshot_observations: return "N-shot observation";
    case PromptSection::utilization_instruction: return "Instruction";
  }
  return "";
}

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", kLatencyDecimals, v);
  return buf;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::string heading(std::size_t k, PromptSection s) {
  return "## " + std::to_string(k + 1) + ". " + std::string(section_title(s));
}

// Digits-only tokens separated by commas and/or whitespace.
std::optional<std::vector<unsigned long>> parse_index_list(std::string_view body) {
  std::vector<unsigned long> out;
  std::string token;
  auto flush = [&]() -> bool {
    if (token.empty()) return true;
    if (token.size() > 9) return false;
    out.push_back(std::stoul(token));
    token.clear();
    return true;
  };
  bool expect_value = true;
  for (char c : body) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      token.push_back(c);
      expect_value = false;
    } else if (c == ',') {
      if (expect_value) return std::nullopt;  // ",," or leading comma
      if (!flush()) return std::nullopt;
      expect_value = true;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (!flush()) return std::nullopt;
    } else {
      return std::nullopt;
    }
  }
  if (!flush()) return std::nullopt;
  if (expect_value && !out.empty()) return std::nullopt;  // trailing comma
  return out;
}

const std::regex& allocation_line_regex() {
  static const std::regex re(R"(allocation[^:\[\]]*:\s*\[([^\]]*)\])", std::regex::icase);
  return re;
}

const std::regex& allocation_prefix_regex() {
  static const std::regex re(R"(allocation[^:]*:)", std::regex::icase);
  return re;
}

}  // namespace

PromptDocument build_prompt(const LatencyMatrix& latency, const ObservationBuffer& buffer,
                            std::size_t candidates_requested) {
  const std::size_t m = latency.num_servers();
  const std::size_t n = latency.num_users();
  if (candidates_requested == 0) throw ContractViolation("build_prompt: request at least 1 candidate");
  for (const auto& o : buffer.items()) {
    if (o.allocation.num_servers() != m || o.allocation.num_users() != n) {
      throw ContractViolation("build_prompt: observation dimensions do not match the matrix");
    }
  }
  const std::string M = std::to_string(m);
  const std::string N = std::to_string(n);
  const std::string K = std::to_string(candidates_requested);

  PromptDocument doc;
  auto& s = doc.sections;

  s[0] = "The network has " + M + " MEC servers (numbered 1 to " + M + ") and " + N +
         " users (numbered 1 to " + N + ").\n"
         "A solution is an allocation vector [s_1, s_2, ..., s_" + N +
         "], where s_a is the number of the MEC server that processes the task of user a.";

  s[1] = "- Each user must be connected to exactly one server, so the vector has exactly " + N +
         " entries, one per user, in user order.\n"
         "- Every entry must be an integer from 1 to " + M + ". No other values are allowed.\n"
         "- An allocation that breaks either rule is rejected and never evaluated.";

  s[2] = "A server processes its assigned tasks one after another, so the processing time of "
         "server i is the sum of L(i, a) over all users a allocated to it.\n"
         "All servers run in parallel, so the network latency is the largest processing time "
         "among all servers.\n"
         "Goal: find the allocation that minimizes the network latency (minimize the maximum "
         "server processing time).";

  {
    std::ostringstream os;
    os << "Task offloading latency L(i, a) in seconds (row: MEC server i, column: user a):";
    for (std::size_t i = 0; i < m; ++i) {
      os << "\nserver " << i + 1 << ':';
      for (std::size_t a = 0; a < n; ++a) os << ' ' << fixed3(latency(i, a));
    }
    s[3] = os.str();
  }

  {
    std::ostringstream os;
    os << "Previously evaluated allocations, oldest first, with their network latency:";
    if (buffer.empty()) {
      os << '\n' << kNoPriorSolutionsMarker;
    } else {
      for (const auto& o : buffer.items()) {
        os << "\nAllocation: " << o.allocation.to_string_one_based() << " -> max latency "
           << fixed3(o.objective_s) << " s";
      }
    }
    s[4] = os.str();
  }

  s[5] = "Propose " + K +
         " new allocations that you expect to lower the network latency, guided by the "
         "patterns in the observations above.\n"
         "Do not write code. Do not explain your reasoning.\n"
         "Reply with exactly " + K + " lines in the following format and nothing else:\n"
         "Allocation: [s_1, s_2, ..., s_" + N + "]";

  std::ostringstream text;
  for (std::size_t k = 0; k < kPromptSectionCount; ++k) {
    if (k) text << "\n\n";
    text << heading(k, static_cast<PromptSection>(k)) << '\n' << s[k];
  }
  text << '\n';
  doc.text = text.str();
  return doc;
}

std::string with_diagnostic(const PromptDocument& prompt, std::string_view diagnostic) {
  std::string out = prompt.text;
  out += "\n## Correction\n";
  out += diagnostic;
  if (!out.empty() && out.back() != '\n') out += '\n';
  out += "Reply again using only the required format.\n";
  return out;
}

std::string to_string(ParseFailureKind kind) {
  switch (kind) {
    case ParseFailureKind::no_candidates: return "no_candidates";
    case ParseFailureKind::infeasible_only: return "infeasible_only";
    case ParseFailureKind::dimension_mismatch: return "dimension_mismatch";
  }
  return "unknown";
}

std::string ParseOutcome::diagnostic(std::size_t num_servers, std::size_t num_users) const {
  std::ostringstream os;
  os << "Your previous reply was rejected.";
  if (rejected.empty()) {
    os << "\n- No line of the form \"Allocation: [s_1, ..., s_" << num_users
       << "]\" was found.";
  }
  for (const auto& r : rejected) {
    os << "\n- Line " << r.line << " \"" << r.text << "\": " << r.reason << '.';
  }
  os << "\nEach user must be connected to exactly one server: give exactly " << num_users
     << " integers, each from 1 to " << num_servers << '.';
  return os.str();
}

ParseOutcome parse_response(std::string_view text, std::size_t num_servers,
                            std::size_t num_users, std::size_t candidates_requested) {
  ParseOutcome out;
  const auto lines = split_lines(text);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const std::string line(lines[k]);
    std::smatch match;
    const bool full = std::regex_search(line, match, allocation_line_regex());
    if (!full) {
      if (std::regex_search(line, allocation_prefix_regex())) {
        out.rejected.push_back({k + 1, trim(line), "the allocation is not a bracketed list",
                                RejectedCandidate::Rule::malformed});
      }
      continue;
    }
    const auto values = parse_index_list(match[1].str());
    if (!values) {
      out.rejected.push_back({k + 1, trim(line), "entries must be plain integers",
                              RejectedCandidate::Rule::malformed});
      continue;
    }
    if (values->size() != num_users) {
      out.rejected.push_back({k + 1, trim(line),
                              "it has " + std::to_string(values->size()) +
                                  " entries but there are " + std::to_string(num_users) +
                                  " users",
                              RejectedCandidate::Rule::dimension_mismatch});
      continue;
    }
    std::vector<std::uint32_t> assign(num_users);
    std::optional<std::string> bad;
    for (std::size_t a = 0; a < num_users; ++a) {
      const unsigned long v = (*values)[a];
      if (v < 1 || v > num_servers) {
        bad = "user " + std::to_string(a + 1) + " is assigned to server " + std::to_string(v) +
              ", which does not exist (servers are 1 to " + std::to_string(num_servers) + ")";
        break;
      }
      assign[a] = static_cast<std::uint32_t>(v - 1);
    }
    if (bad) {
      out.rejected.push_back(
          {k + 1, trim(line), *bad, RejectedCandidate::Rule::server_out_of_range});
      continue;
    }
    if (out.allocations.size() < candidates_requested) {
      out.allocations.emplace_back(num_servers, std::move(assign));
    }
  }

  if (out.allocations.empty()) {
    bool range = false;
    bool dims = false;
    for (const auto& r : out.rejected) {
      range |= r.rule == RejectedCandidate::Rule::server_out_of_range;
      dims |= r.rule == RejectedCandidate::Rule::dimension_mismatch;
    }
    out.failure = range  ? ParseFailureKind::infeasible_only
                  : dims ? ParseFailureKind::dimension_mismatch
                         : ParseFailureKind::no_candidates;
  }
  return out;
}

PromptView read_prompt(std::string_view text) {
  PromptView view;
  enum class Where { other, matrix, observations, instruction } where = Where::other;
  const std::string matrix_heading = heading(3, PromptSection::network_parameter_input);
  const std::string nshot_heading = heading(4, PromptSection::nshot_observations);
  const std::string instr_heading = heading(5, PromptSection::utilization_instruction);
  static const std::regex server_re(R"(^server\s+(\d+):((?:\s+[0-9.eE+-]+)+)\s*$)");
  static const std::regex obs_re(
      R"(^Allocation:\s*\[([^\]]*)\]\s*->\s*max latency\s+([0-9.eE+-]+)\s*s\s*$)");
  static const std::regex propose_re(R"(^Propose\s+(\d+)\s+new allocations)");

  for (const auto line_view : split_lines(text)) {
    const std::string line(line_view);
    if (line.rfind("## ", 0) == 0) {
      where = line == matrix_heading  ? Where::matrix
              : line == nshot_heading ? Where::observations
              : line == instr_heading ? Where::instruction
                                      : Where::other;
      continue;
    }
    std::smatch m;
    if (where == Where::matrix && std::regex_match(line, m, server_re)) {
      std::istringstream cells(m[2].str());
      std::vector<double> row;
      double v = 0.0;
      while (cells >> v) row.push_back(v);
      view.matrix.push_back(std::move(row));
    } else if (where == Where::observations && std::regex_match(line, m, obs_re)) {
      const auto values = parse_index_list(m[1].str());
      if (!values) throw ValidationError("prompt observation is malformed: " + line);
      std::vector<std::uint32_t> assign;
      for (unsigned long v : *values) {
        if (v == 0) throw ValidationError("prompt observation uses server 0: " + line);
        assign.push_back(static_cast<std::uint32_t>(v - 1));
      }
      view.observations.emplace_back(std::move(assign), std::stod(m[2].str()));
    } else if (where == Where::instruction && std::regex_search(line, m, propose_re)) {
      view.candidates_requested = std::stoul(m[1].str());
    }
  }

  if (view.matrix.empty()) throw ValidationError("prompt has no latency matrix");
  const std::size_t n = view.matrix.front().size();
  for (const auto& row : view.matrix) {
    if (row.size() != n || n == 0) throw ValidationError("prompt latency matrix is ragged");
  }
  for (const auto& [assign, obj] : view.observations) {
    if (assign.size() != n) throw ValidationError("prompt observation has the wrong length");
    for (auto s : assign) {
      if (s >= view.matrix.size()) throw ValidationError("prompt observation server out of range");
    }
  }
  if (view.candidates_requested == 0) {
    throw ValidationError("prompt does not state how many allocations to propose");
  }
  return view;
}

}  // namespace mecopt
