#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "milkyway/harness.hpp"
#include "milkyway/notes.hpp"
#include "milkyway/question.hpp"
#include "milkyway/time_util.hpp"

namespace milkyway {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Budgets {
  int max_tool_calls = 50;
  std::int64_t max_context_tokens = 200000;
  std::optional<std::int64_t> gh_byte_budget;
  std::optional<int> gh_write_calls;

  void validate() const;  // all budgets strictly positive when set
};

// Tokenizer-equivalent length function: character count over a configured
// chars-per-token ratio, rounded up.
struct LengthFn {
  double chars_per_token = 4.0;

  std::int64_t tokens(std::string_view text) const {
    return static_cast<std::int64_t>(
        std::ceil(static_cast<double>(text.size()) / chars_per_token));
  }
};

// deny exactly when the per-checkpoint call count has reached the cap.
inline bool tool_budget_allows(int tool_calls_so_far, const Budgets& budgets) {
  return tool_calls_so_far < budgets.max_tool_calls;
}

struct EvidenceItem {
  std::string id;
  Timestamp timestamp = 0;
  std::string text;
};

class EvidenceSource {
 public:
  virtual ~EvidenceSource() = default;
  // Must only return items with timestamp <= as_of.
  virtual std::vector<EvidenceItem> query(const std::string& query_text,
                                          Timestamp as_of) = 0;
};

struct AuditorViolation {
  std::string item_id;
  Timestamp item_time = 0;
  Timestamp as_of = 0;
  std::string query;
};

// Wraps any source and records every item whose timestamp exceeds the
// as_of boundary of the call. Violating items are also withheld from the
// caller so a misbehaving source cannot leak future evidence downstream.
class ForwardOnlyAuditor : public EvidenceSource {
 public:
  explicit ForwardOnlyAuditor(EvidenceSource& inner) : inner_(&inner) {}

  std::vector<EvidenceItem> query(const std::string& query_text,
                                  Timestamp as_of) override;

  const std::vector<AuditorViolation>& violations() const { return violations_; }

 private:
  EvidenceSource* inner_;
  std::vector<AuditorViolation> violations_;
};

class EmptyEvidenceSource : public EvidenceSource {
 public:
  std::vector<EvidenceItem> query(const std::string&, Timestamp) override {
    return {};
  }
};

// Hermetic corpus: a directory of documents, one per file, with a small
// metadata header:
//   id: <opaque id>
//   timestamp: <ISO time>
//   <blank line>
//   <text...>
// query() returns documents containing the query case-insensitively whose
// timestamp is within the boundary, newest first.
class DirectoryEvidenceSource : public EvidenceSource {
 public:
  explicit DirectoryEvidenceSource(const std::filesystem::path& dir);

  std::vector<EvidenceItem> query(const std::string& query_text,
                                  Timestamp as_of) override;

  std::size_t size() const { return items_.size(); }

 private:
  std::vector<EvidenceItem> items_;
};

// Deterministic concatenation of the fixed prior, the question statement
// with its resolution rule, and the guidance block. An empty guidance
// string is rendered as the canonical empty block.
std::string assemble_base_prompt(const std::string& prior, const Question& question,
                                 const std::string& guidance);

class BaseAgentPort {
 public:
  virtual ~BaseAgentPort() = default;
  virtual std::pair<RunTrace, FinalizedPayload> run(const Question& question,
                                                    Timestamp checkpoint_time,
                                                    const std::string& guidance,
                                                    EvidenceSource& evidence,
                                                    const Budgets& budgets) = 0;
};

// One structured proposal per invocation; the raw document is archived and
// parsed by the loop.
class EditorPort {
 public:
  virtual ~EditorPort() = default;
  virtual std::string propose(const HarnessState& state,
                              const NoteHistory& history) = 0;
};

class CheckerPort {
 public:
  virtual ~CheckerPort() = default;
  virtual std::string check(const HarnessState& final_state,
                            const NoteHistory& history, const Outcome& outcome) = 0;
};

// Generic-memory control: receives the previous blob and returns the full
// replacement text; the loop truncates to the byte budget.
class GenericMemoryWriterPort {
 public:
  virtual ~GenericMemoryWriterPort() = default;
  virtual std::string write(const std::string& previous_blob,
                            const NoteHistory& history) = 0;
};

// --- Scripted ports (deterministic, for hermetic runs) ---

struct ScriptBranch {
  std::string guidance_contains;  // first matching branch wins
  FinalizedPayload payload;
};

struct ScriptRow {
  std::vector<ScriptBranch> branches;
  FinalizedPayload default_payload;
  std::string evidence_query;  // issued once per run when non-empty
};

class ScriptedBaseAgent : public BaseAgentPort {
 public:
  void set_row(const std::string& question_id, int checkpoint_index, ScriptRow row) {
    rows_[{question_id, checkpoint_index}] = std::move(row);
  }

  std::pair<RunTrace, FinalizedPayload> run(const Question& question,
                                            Timestamp checkpoint_time,
                                            const std::string& guidance,
                                            EvidenceSource& evidence,
                                            const Budgets& budgets) override;

 private:
  std::map<std::pair<std::string, int>, ScriptRow> rows_;
};

// Deterministic rewrite rule over (state, history) producing the structured
// editor document.
using EditorRule = std::function<std::pair<PreResolutionSignal, HarnessPatch>(
    const HarnessState&, const NoteHistory&)>;

class ScriptedEditor : public EditorPort {
 public:
  explicit ScriptedEditor(EditorRule rule) : rule_(std::move(rule)) {}

  std::string propose(const HarnessState& state, const NoteHistory& history) override;

 private:
  EditorRule rule_;
};

// Editor rule that reacts to consecutive-prediction divergence: when the
// last two numeric predictions differ by more than `threshold` (or choice
// predictions differ at all), it proposes the next not-yet-active entry
// from `writes`; otherwise the null patch.
EditorRule divergence_threshold_rule(double threshold, std::vector<PatchAdd> writes);

using CheckerRule = std::function<HarnessPatch(const HarnessState&, const NoteHistory&,
                                               const Outcome&)>;

class ScriptedChecker : public CheckerPort {
 public:
  explicit ScriptedChecker(CheckerRule rule) : rule_(std::move(rule)) {}

  std::string check(const HarnessState& final_state, const NoteHistory& history,
                    const Outcome& outcome) override;

 private:
  CheckerRule rule_;
};

// Null checker: always proposes the empty update.
class NullChecker : public CheckerPort {
 public:
  std::string check(const HarnessState&, const NoteHistory&, const Outcome&) override;
};

using MemoryWriterRule =
    std::function<std::string(const std::string&, const NoteHistory&)>;

class ScriptedMemoryWriter : public GenericMemoryWriterPort {
 public:
  explicit ScriptedMemoryWriter(MemoryWriterRule rule) : rule_(std::move(rule)) {}

  std::string write(const std::string& previous_blob,
                    const NoteHistory& history) override {
    return rule_(previous_blob, history);
  }

 private:
  MemoryWriterRule rule_;
};

}  // namespace milkyway
