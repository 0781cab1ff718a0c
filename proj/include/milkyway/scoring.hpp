#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace milkyway {

enum class AnswerType { BinaryChoice, SimpleMc, DifficultMc, Numeric };
const char* answer_type_key(AnswerType t);
AnswerType answer_type_from_key(const std::string& key);

inline bool is_choice_type(AnswerType t) { return t != AnswerType::Numeric; }

// Selected option indices, kept sorted and unique.
struct ChoiceSelection {
  std::vector<int> selected;
  bool operator==(const ChoiceSelection&) const = default;
};

struct PredictionValue {
  std::variant<ChoiceSelection, double> value;

  bool is_choice() const { return std::holds_alternative<ChoiceSelection>(value); }
  bool is_numeric() const { return std::holds_alternative<double>(value); }
  const ChoiceSelection& choice() const { return std::get<ChoiceSelection>(value); }
  double numeric() const { return std::get<double>(value); }

  static PredictionValue numeric_value(double v) { return {v}; }
  static PredictionValue choice_value(std::vector<int> selected);

  bool operator==(const PredictionValue&) const = default;
};

// The target-day value plus the seven most recent historical values.
struct NumericHistory {
  std::vector<double> values;  // must hold exactly 8 entries to be scorable
  double epsilon = 1e-9;       // numerical-stability constant, recorded per score
};

struct ScoringError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Raised when a numeric question's eight-point history is unavailable;
// callers turn this into an excluded_reason rather than a score.
struct InvalidHistoryError : ScoringError {
  using ScoringError::ScoringError;
};

double sample_stddev(const std::vector<double>& values);  // n-1 denominator

// Option-level F1 over equal-length 0/1 indicator vectors. Binary questions
// with more than one selected option are invalid and score 0.
double score_choice(const std::vector<int>& gold, const std::vector<int>& pred,
                    AnswerType answer_type);

// Convenience: builds indicator vectors over m options from selections.
double score_choice(const ChoiceSelection& gold, const ChoiceSelection& pred,
                    int option_count, AnswerType answer_type);

// max(0, 1 - ((pred - v) / (3*sigma(V) + eps))^2), sigma = sample stddev.
double score_numeric(double pred, const NumericHistory& history, double resolved);

struct ScoreRecord {
  std::string question_id;
  std::string condition;         // "nh" | "gh" | "fh" | free-form
  std::string checkpoint_label;  // e.g. "T-4d"
  AnswerType answer_type = AnswerType::Numeric;
  bool resolved = false;
  std::optional<double> score;   // in [0,1] when present
  std::optional<std::string> excluded_reason;
  double epsilon_used = 1e-9;
};

struct TypeAggregate {
  std::optional<double> mean;
  int scored = 0;
  int excluded = 0;
};

struct FutureWorldAggregate {
  std::optional<double> overall;
  TypeAggregate bin, smc, dmc, num;
  int scored_total = 0;
  int excluded_total = 0;
};

// Simple mean over scored records plus type-level means; records are
// expected to share one (condition, checkpoint) cell.
FutureWorldAggregate aggregate_futureworld(const std::vector<ScoreRecord>& records);

// Published weighted overall: 0.10*L1 + 0.20*L2 + 0.30*L3 + 0.40*L4.
double futurex_overall(double l1, double l2, double l3, double l4);

struct MatchedSetError : ScoringError {
  explicit MatchedSetError(std::string msg, std::vector<std::string> ids)
      : ScoringError(std::move(msg)), offending_ids(std::move(ids)) {}
  std::vector<std::string> offending_ids;
};

// One condition's aggregate score at one checkpoint. question_ids may be
// empty when replaying published aggregates; matched-set validation then
// has nothing to check for that point.
struct CheckpointScore {
  std::string label;
  double score = 0.0;
  std::set<std::string> question_ids;
};

// S(final) - S(earliest). Validates that every checkpoint carrying ids
// scored the same question set.
double ladder_delta(const std::vector<CheckpointScore>& checkpoints,
                    const std::string& earliest_label,
                    const std::string& final_label);

struct MechanismCell {
  std::string cell;  // e.g. "GPT/05-05"
  int n = 0;
  std::optional<std::vector<CheckpointScore>> nh, gh, fh;
};

struct ReadoutRow {
  std::string cell;
  int n = 0;
  std::optional<double> delta_nh, delta_gh, delta_fh;
  std::optional<double> fh_minus_nh, fh_minus_gh;
};

// Table of per-condition deltas and FH-control differences; absent GH
// cells yield absent markers.
std::vector<ReadoutRow> mechanism_readout(const std::vector<MechanismCell>& cells,
                                          const std::string& earliest_label,
                                          const std::string& final_label);

}  // namespace milkyway
