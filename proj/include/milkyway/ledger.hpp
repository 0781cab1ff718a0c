#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "milkyway/harness.hpp"
#include "milkyway/serialize.hpp"

namespace milkyway {

struct LedgerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Raised on any attempt to rewrite an existing artifact.
struct AppendOnlyViolation : LedgerError {
  using LedgerError::LedgerError;
};

// Per-checkpoint compute footprint, written as main_agent_stats.json.
struct CheckpointStats {
  int tool_calls = 0;
  std::int64_t prompt_tokens = 0;
  int llm_calls = 0;
};

// Append-only per-question artifact store. Layout:
//   {run}/{condition}/{question_id}/ckpt_{t}/<artifact>
//   {run}/{condition}/harness/{question_id}/legacy_versions/ck{t}/harness.json
// Writes are temp-then-rename and refuse to replace existing artifacts;
// reruns go to fresh run directories.
class Ledger {
 public:
  // A stage names one write pass over the run directory ("run" for the
  // main loop, "post_resolution" for the checking pass). Each stage gets
  // its own close manifest covering the artifacts it added.
  explicit Ledger(std::filesystem::path run_dir, std::string stage = "run");

  const std::filesystem::path& run_dir() const { return run_dir_; }

  std::filesystem::path checkpoint_dir(const std::string& condition,
                                       const std::string& question_id,
                                       int checkpoint) const;

  // Writes one artifact; returns the stored path.
  std::filesystem::path write_artifact(const std::string& condition,
                                       const std::string& question_id,
                                       int checkpoint, const std::string& name,
                                       const std::string& content);

  // Run-scoped artifact at {run}/<name> (cohort copy, config echo, ...).
  std::filesystem::path write_run_artifact(const std::string& name,
                                           const std::string& content);

  // ckpt_{t}/harness_after.json plus the legacy_versions copy.
  void write_harness_snapshot(const std::string& condition,
                              const std::string& question_id, int checkpoint,
                              const HarnessState& state);

  void write_stats(const std::string& condition, const std::string& question_id,
                   int checkpoint, const CheckpointStats& stats);

  // Writes the close manifest (relative path + content digest per
  // artifact). Further writes through this ledger are refused.
  void close();
  bool closed() const { return closed_; }

 private:
  std::filesystem::path run_dir_;
  std::string stage_;
  bool closed_ = false;
};

// FNV-1a 64-bit over the file contents, hex-encoded.
std::string content_digest(const std::string& bytes);
std::string file_digest(const std::filesystem::path& file);

// Re-derives digests for every file in the run directory and compares with
// the close manifest(s). Returns true when every artifact is listed in
// exactly one manifest with a matching digest. Problems are appended to
// `problems` when provided.
bool verify_run_integrity(const std::filesystem::path& run_dir,
                          std::vector<std::string>* problems = nullptr);

struct PanelARow {
  std::string cohort;
  int checkpoint = 0;
  int nonempty_questions = 0;
  int total_questions = 0;
  int add_entries = 0;
  int f_adds = 0;
  int e_adds = 0;
  int u_adds = 0;
  int revise_ops = 0;
};

struct PanelBRow {
  std::string cohort;
  int deepest_checkpoint = 0;
  int nonempty_files = 0;
  int total_files = 0;
  double mean_blob_bytes = 0.0;
  int typed_schema_violations = 0;
};

// Typed patch-stream audit over the FH ledger: per checkpoint, questions
// with a non-empty harness after apply, applied adds by axis, applied
// revises. Gaps (missing artifacts) are reported alongside the rows.
std::vector<PanelARow> audit_patch_stream(const std::filesystem::path& run_dir,
                                          const std::string& cohort,
                                          std::vector<std::string>* gaps = nullptr);

// Generic-memory audit over the GH ledger: deepest-checkpoint blob per
// question, nonempty count, mean byte size, forbidden-vocabulary hits.
PanelBRow audit_generic_blobs(const std::filesystem::path& run_dir,
                              const std::string& cohort,
                              const std::vector<std::string>& forbidden_vocabulary);

}  // namespace milkyway
