#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "milkyway/loop.hpp"

namespace milkyway {

// A question batch plus optional deterministic scripts for hermetic runs.
// The raw document is retained so the run can archive it verbatim.
struct Cohort {
  std::string cohort_id;
  std::vector<Question> questions;
  Json raw;
};

Cohort load_cohort(const std::filesystem::path& file);
Cohort cohort_from_json(const Json& j);
Json question_to_json(const Question& q);

// Scripted ports assembled from the cohort document's "script" sections.
// Throws ConfigError when the cohort carries no scripts.
struct ScriptedPorts {
  std::unique_ptr<ScriptedBaseAgent> agent;
  std::unique_ptr<EditorPort> editor;
  std::unique_ptr<GenericMemoryWriterPort> memory_writer;
  std::unique_ptr<CheckerPort> checker;

  Ports ports();
};

ScriptedPorts build_scripted_ports(const Cohort& cohort);

struct CohortRunResult {
  // condition key -> per-question results, in cohort order
  std::map<std::string, std::vector<QuestionRunResult>> by_condition;
};

// Executes the cohort under each condition into one run directory
// ({run}/{condition}/...), archives the cohort document and a config echo,
// writes per-condition forward-only reports, and closes the run. When both
// FH and GH are requested and paired budgets are enabled, FH runs first
// and each GH byte budget is the serialized size of the matched FH harness
// snapshot at the same (question, checkpoint).
CohortRunResult run_cohort(const Cohort& cohort, std::vector<Condition> conditions,
                           const std::filesystem::path& run_dir,
                           const RunConfig& config, Ports ports,
                           EvidenceSource& evidence);

// Convenience: scripted ports + directory corpus (optional).
CohortRunResult run_scripted_cohort(const Cohort& cohort,
                                    std::vector<Condition> conditions,
                                    const std::filesystem::path& run_dir,
                                    const RunConfig& config,
                                    const std::filesystem::path& corpus_dir = {});

// --- Ledger replay: scoring and readouts computed from artifacts only ---

std::vector<ScoreRecord> score_run(const std::filesystem::path& run_dir,
                                   const std::string& condition);

struct LadderCell {
  std::string cell;  // cohort id
  std::string condition;
  std::vector<CheckpointScore> checkpoints;  // ordered earliest -> final
  int n = 0;
};

// Builds per-condition ladders over the matched resolved set (intersection
// of scored question ids across every condition/checkpoint cell). With
// matched=false each cell is scored independently on whatever resolved.
std::vector<LadderCell> ladder_from_run(const std::filesystem::path& run_dir,
                                        bool matched = true);

std::vector<ReadoutRow> readout_from_run(const std::filesystem::path& run_dir,
                                         bool matched = true);

// Writes cohort.json plus a per-question corpus under {dir}/corpus/,
// including future-dated trap documents that a forward-only source must
// never surface. The cohort is guidance-sensitive by construction: the
// scripted editor writes one evidence-routing entry once consecutive
// predictions diverge, and the scripted agent predicts near gold only when
// that entry is active.
void write_demo_cohort(const std::filesystem::path& dir, int question_count = 24);

}  // namespace milkyway
