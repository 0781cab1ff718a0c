#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "milkyway/config.hpp"
#include "milkyway/harness.hpp"
#include "milkyway/ledger.hpp"
#include "milkyway/notes.hpp"
#include "milkyway/ports.hpp"
#include "milkyway/question.hpp"

namespace milkyway {

enum class Condition { NH, GH, FH };
const char* condition_key(Condition c);
Condition condition_from_key(const std::string& key);

// The only state crossing checkpoint boundaries. NH carries nothing, GH a
// byte-bounded free-form blob, FH the typed harness.
struct ConditionState {
  Condition condition = Condition::NH;
  HarnessState harness;     // FH
  std::string memory_blob;  // GH
};

ConditionState initial_condition_state(Condition condition,
                                       const std::string& question_id,
                                       std::optional<HarnessState> seed = {});

struct TrajectoryEntry {
  int checkpoint = 0;  // schedule index t
  Timestamp time = 0;
  PredictionValue prediction;
};

struct Trajectory {
  std::string question_id;
  std::vector<TrajectoryEntry> entries;
};

struct Ports {
  BaseAgentPort* agent = nullptr;
  EditorPort* editor = nullptr;
  GenericMemoryWriterPort* memory_writer = nullptr;
  CheckerPort* checker = nullptr;
};

struct CheckpointOutcome {
  bool ok = false;
  std::string failure;  // set when !ok
  CheckpointNote note;
  FinalizedPayload payload;
  RunTrace trace;
  std::string guidance;
  std::string prompt;
};

// One full prediction run at schedule index t under the condition's
// guidance injection. Does not modify the condition state.
CheckpointOutcome run_checkpoint(const Question& question, int t,
                                 const ConditionState& state, Ports& ports,
                                 const Budgets& budgets, EvidenceSource& evidence,
                                 const RunConfig& config);

struct UpdateRecord {
  ConditionState next;
  // FH
  std::string raw_editor_output;
  bool editor_failed = false;
  bool parse_failed = false;
  std::string failure_detail;
  PreResolutionSignal signal;
  HarnessPatch validated_patch;
  ApplyReport report;
  bool applied = false;
  // GH
  bool write_attempted = false;
  bool write_dropped = false;
  bool truncated = false;
  std::int64_t blob_bytes_before = 0;
  std::int64_t blob_bytes_after = 0;
};

// At most one state transition per checkpoint: FH parses/validates/applies
// one editor proposal, GH performs one bounded blob write, NH is a no-op.
// Requires |history| >= 2; editor/writer failures degrade to no-ops.
UpdateRecord run_update(const ConditionState& state, const NoteHistory& history,
                        Ports& ports, const Budgets& budgets, const RunConfig& config,
                        std::int64_t gh_byte_budget, int checkpoint);

struct CheckpointRecord {
  int checkpoint = 0;
  Timestamp time = 0;
  bool executed = false;  // false when at/after resolution
  CheckpointOutcome outcome;
  std::optional<UpdateRecord> update;
  CheckpointStats stats;
  int auditor_violations = 0;
};

struct QuestionRunResult {
  Trajectory trajectory;
  ConditionState final_state;
  NoteHistory history;
  std::vector<CheckpointRecord> checkpoints;
  std::vector<AuditorViolation> violations;
};

// Per-(question, checkpoint) GH byte budget; paired runs derive it from
// the matched FH harness snapshot size.
using GhBudgetFn = std::function<std::int64_t(const std::string&, int)>;

struct RunOptions {
  GhBudgetFn gh_byte_budget;  // defaults to config.gh_fixed_byte_budget
};

// Algorithm: for each checkpoint strictly before resolution, run the
// BaseAgent under the condition's guidance, construct the post-hoc note,
// and from the second note onward perform the single bounded update. Only
// the condition state crosses checkpoint boundaries; every other artifact
// is ledgered as checkpoint-local.
QuestionRunResult run_question(const Question& question, Condition condition,
                               Ports& ports, const Budgets& budgets,
                               EvidenceSource& evidence, const RunConfig& config,
                               Ledger* ledger = nullptr, RunOptions options = {});

struct PostResolutionResult {
  HarnessState checked;  // equals the input state when unchecked
  bool checked_ok = false;
  std::string raw_checker_output;
  HarnessPatch validated_patch;
  ApplyReport report;
  std::string failure;
};

// Complementary audit of the final harness once the outcome is known.
// Never affects any scored prediction; checker failures leave the harness
// unchanged and are recorded as unchecked.
PostResolutionResult run_post_resolution_check(const HarnessState& final_state,
                                               const NoteHistory& history,
                                               const Outcome& outcome,
                                               CheckerPort& checker,
                                               const RunConfig& config);

}  // namespace milkyway
