#pragma once

#include <optional>
#include <string>
#include <vector>

#include "milkyway/scoring.hpp"
#include "milkyway/time_util.hpp"

namespace milkyway {

// Resolved value attached to a question once known. Numeric questions also
// carry the benchmark's eight-point history; questions where it cannot be
// recovered are excluded from scoring rather than scored.
struct Outcome {
  bool valid = false;
  PredictionValue gold;
  std::optional<std::vector<double>> numeric_history;
};

struct Question {
  std::string question_id;
  std::string statement;
  AnswerType answer_type = AnswerType::Numeric;
  std::vector<std::string> options;  // choice types only
  std::string resolution_rule;
  Timestamp issue_time = 0;
  Timestamp resolution_time = 0;
  // Strictly increasing; the first equals issue_time. Checkpoints that fall
  // at or after the (possibly early) resolution are excluded at run time.
  std::vector<Timestamp> checkpoints;
  std::optional<Outcome> outcome;

  // "T-{k}d" with k = days from the checkpoint to resolution, minimum 1.
  std::string checkpoint_label(int index) const;

  void check_schedule() const;  // throws std::invalid_argument on bad ordering
};

}  // namespace milkyway
