#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "milkyway/harness.hpp"
#include "milkyway/scoring.hpp"
#include "milkyway/time_util.hpp"

namespace milkyway {

// Structured finalization payload returned by a BaseAgent run.
struct FinalizedPayload {
  std::optional<PredictionValue> prediction;
  std::vector<std::string> supporting_evidence;
  std::vector<std::string> counterevidence;
  std::vector<std::string> unresolved_concerns;
  std::vector<std::string> evidence_routes;
};

struct TraceEvent {
  std::string kind;  // "llm_call" | "tool_call" | "evidence" | "reflection" | ...
  std::string detail;
};

// Checkpoint-local diagnostic record of one run. Never carried forward.
struct RunTrace {
  std::vector<TraceEvent> events;
  int tool_calls = 0;
  int llm_calls = 0;
  std::int64_t prompt_tokens = 0;  // length-function units
  int evidence_violations = 0;     // forward-only auditor findings
};

// Fixed-schema post-hoc summary of one checkpoint run.
struct CheckpointNote {
  std::string question_id;
  int checkpoint_index = 0;  // t >= 1
  Timestamp checkpoint_time = 0;
  PredictionValue prediction;
  std::vector<std::string> supporting_rationale;
  std::vector<std::string> countervailing_rationale;
  std::vector<std::string> evidence_routes;
  std::vector<std::string> unresolved_concerns;
  std::optional<std::string> reflection;  // non-load-bearing

  bool operator==(const CheckpointNote&) const = default;
};

struct NoteHistory {
  std::string question_id;
  std::vector<CheckpointNote> notes;

  bool operator==(const NoteHistory&) const = default;
};

// Diagnosis over the note history, produced by the editor port. Both lists
// may be empty; fixed code never computes its content.
struct PreResolutionSignal {
  std::vector<std::string> prediction_divergence;
  std::vector<std::string> diagnostic_findings;

  bool operator==(const PreResolutionSignal&) const = default;
};

struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SequenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Builds the note from the finalized payload verbatim. The trace is
// diagnostic-only: the sole field read from it is an optional trailing
// "reflection" event. Throws ConstructionError naming a missing field.
CheckpointNote construct_note(const RunTrace& trace, const FinalizedPayload& payload,
                              const std::string& question_id, int checkpoint_index,
                              Timestamp checkpoint_time);

// Returns a new history with the note appended; enforces contiguous
// indices starting at 1 and strictly increasing checkpoint times.
NoteHistory append_note(const NoteHistory& history, const CheckpointNote& note);

// Parses the single structured editor document: {"signal": {...},
// "update": {add/revise/deprecate}}. A missing update yields the null
// patch; missing sub-lists default to empty; extraneous keys are ignored.
// Throws ParseError on malformed documents or incomplete entries.
std::pair<PreResolutionSignal, HarnessPatch> parse_editor_output(const std::string& raw);

}  // namespace milkyway
