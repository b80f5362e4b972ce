#pragma once

// Instruction configuration and utility evaluation: the six-section prompt,
// the N-shot observation buffer, and validation of model replies.
//
// Wire format shared by prompt, parser and the heuristic stub backend:
//   - matrix lines      "server <i>: <L_i1> <L_i2> ... <L_iN>"   (3 decimals)
//   - observation lines "Allocation: [s_1, ..., s_N] -> max latency <x> s"
//   - reply lines       "Allocation: [s_1, ..., s_N]"             (1-based)

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecopt/assignment.hpp"
#include "mecopt/netmodel.hpp"

namespace mecopt {

inline constexpr std::size_t kDefaultNShotCapacity = 20;
inline constexpr int kLatencyDecimals = 3;

struct Observation {
  Allocation allocation;
  double objective_s = 0.0;
  std::size_t iteration_born = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

// Most-recent-N window; the oldest entry is evicted first.
class ObservationBuffer {
 public:
  explicit ObservationBuffer(std::size_t capacity = kDefaultNShotCapacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const std::deque<Observation>& items() const { return items_; }

  // Adds an already evaluated observation; used by record() and resumption.
  void push(Observation obs);

 private:
  std::size_t capacity_;
  std::deque<Observation> items_;
};

// Evaluates alloc against latency, appends it and returns the observation.
// Throws ContractViolation if alloc does not match the matrix dimensions.
Observation record(ObservationBuffer& buffer, const Allocation& alloc,
                   const LatencyMatrix& latency, std::size_t iteration = 0);

nlohmann::json buffer_to_json(const ObservationBuffer& buffer);
// Objectives are re-evaluated against latency and must match exactly.
ObservationBuffer buffer_from_json(const nlohmann::json& j, const LatencyMatrix& latency);

enum class PromptSection {
  solution_variable_definition,
  constraint_enforcement,
  objective_description,
  network_parameter_input,
  nshot_observations,
  utilization_instruction,
};
inline constexpr std::size_t kPromptSectionCount = 6;

std::string_view section_title(PromptSection s);

struct PromptDocument {
  std::array<std::string, kPromptSectionCount> sections;
  std::string text;

  const std::string& section(PromptSection s) const {
    return sections[static_cast<std::size_t>(s)];
  }
};

inline constexpr std::string_view kNoPriorSolutionsMarker = "(no prior solutions yet)";

// Deterministic: identical inputs yield byte-identical text.
PromptDocument build_prompt(const LatencyMatrix& latency, const ObservationBuffer& buffer,
                            std::size_t candidates_requested);

// Prompt text with a correction block appended, sent after a rejected reply.
std::string with_diagnostic(const PromptDocument& prompt, std::string_view diagnostic);

enum class ParseFailureKind { no_candidates, infeasible_only, dimension_mismatch };
std::string to_string(ParseFailureKind kind);

struct RejectedCandidate {
  std::size_t line = 0;     // 1-based line in the reply
  std::string text;         // the offending line, trimmed
  std::string reason;       // which rule it broke, in plain words
  enum class Rule { malformed, dimension_mismatch, server_out_of_range } rule = Rule::malformed;
};

struct ParseOutcome {
  std::vector<Allocation> allocations;
  std::vector<RejectedCandidate> rejected;
  // Set iff allocations is empty.
  std::optional<ParseFailureKind> failure;

  bool ok() const { return !allocations.empty(); }
  // Plain-language explanation fit for re-prompting.
  std::string diagnostic(std::size_t num_servers, std::size_t num_users) const;
};

// Scans every line for "Allocation: [..]" (case-insensitive, whitespace
// tolerant, 1-based server labels). At most candidates_requested valid
// allocations are returned; nothing infeasible is ever returned.
ParseOutcome parse_response(std::string_view text, std::size_t num_servers,
                            std::size_t num_users, std::size_t candidates_requested);

// Reading side of the wire format, used by the heuristic backend.
struct PromptView {
  std::vector<std::vector<double>> matrix;  // as rendered, 3 decimals
  std::vector<std::pair<std::vector<std::uint32_t>, double>> observations;  // 0-based
  std::size_t candidates_requested = 0;
};
// Throws ValidationError if the text does not follow build_prompt's layout.
PromptView read_prompt(std::string_view text);

}  // namespace mecopt
