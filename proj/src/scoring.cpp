#include "milkyway/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace milkyway {

const char* answer_type_key(AnswerType t) {
  switch (t) {
    case AnswerType::BinaryChoice: return "binary_choice";
    case AnswerType::SimpleMc: return "simple_mc";
    case AnswerType::DifficultMc: return "difficult_mc";
    default: return "numeric";
  }
}

AnswerType answer_type_from_key(const std::string& key) {
  if (key == "binary_choice") return AnswerType::BinaryChoice;
  if (key == "simple_mc") return AnswerType::SimpleMc;
  if (key == "difficult_mc") return AnswerType::DifficultMc;
  if (key == "numeric") return AnswerType::Numeric;
  throw std::invalid_argument("unknown answer type: " + key);
}

PredictionValue PredictionValue::choice_value(std::vector<int> selected) {
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  return {ChoiceSelection{std::move(selected)}};
}

double sample_stddev(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double score_choice(const std::vector<int>& gold, const std::vector<int>& pred,
                    AnswerType answer_type) {
  if (gold.size() != pred.size()) {
    throw ScoringError("indicator length mismatch: gold " +
                       std::to_string(gold.size()) + " vs pred " +
                       std::to_string(pred.size()));
  }
  int gold_sum = 0, pred_sum = 0, dot = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    gold_sum += gold[i];
    pred_sum += pred[i];
    dot += gold[i] * pred[i];
  }
  if (gold_sum == 0) throw ScoringError("gold indicator vector is all-zero");
  if (answer_type == AnswerType::BinaryChoice && pred_sum > 1) return 0.0;
  if (gold_sum + pred_sum == 0) return 0.0;
  return 2.0 * static_cast<double>(dot) /
         static_cast<double>(gold_sum + pred_sum);
}

double score_choice(const ChoiceSelection& gold, const ChoiceSelection& pred,
                    int option_count, AnswerType answer_type) {
  std::vector<int> g(option_count, 0), p(option_count, 0);
  for (int i : gold.selected) {
    if (i < 0 || i >= option_count) throw ScoringError("gold option index out of range");
    g[i] = 1;
  }
  for (int i : pred.selected) {
    if (i < 0 || i >= option_count) throw ScoringError("pred option index out of range");
    p[i] = 1;
  }
  return score_choice(g, p, answer_type);
}

double score_numeric(double pred, const NumericHistory& history, double resolved) {
  if (history.values.size() != 8) {
    throw InvalidHistoryError("numeric history must hold exactly 8 values, got " +
                              std::to_string(history.values.size()));
  }
  const double sigma = sample_stddev(history.values);
  const double denom = 3.0 * sigma + history.epsilon;
  const double z = (pred - resolved) / denom;
  return std::max(0.0, 1.0 - z * z);
}

namespace {

void accumulate(TypeAggregate& agg, double& sum, const ScoreRecord& r) {
  if (r.score.has_value()) {
    sum += *r.score;
    ++agg.scored;
  } else {
    ++agg.excluded;
  }
}

}  // namespace

FutureWorldAggregate aggregate_futureworld(const std::vector<ScoreRecord>& records) {
  FutureWorldAggregate out;
  double total_sum = 0.0;
  double sums[4] = {0, 0, 0, 0};
  TypeAggregate* aggs[4] = {&out.bin, &out.smc, &out.dmc, &out.num};
  for (const auto& r : records) {
    int k;
    switch (r.answer_type) {
      case AnswerType::BinaryChoice: k = 0; break;
      case AnswerType::SimpleMc: k = 1; break;
      case AnswerType::DifficultMc: k = 2; break;
      default: k = 3; break;
    }
    accumulate(*aggs[k], sums[k], r);
    if (r.score.has_value()) {
      total_sum += *r.score;
      ++out.scored_total;
    } else {
      ++out.excluded_total;
    }
  }
  if (out.scored_total > 0) out.overall = total_sum / out.scored_total;
  for (int k = 0; k < 4; ++k) {
    if (aggs[k]->scored > 0) aggs[k]->mean = sums[k] / aggs[k]->scored;
  }
  return out;
}

double futurex_overall(double l1, double l2, double l3, double l4) {
  return 0.10 * l1 + 0.20 * l2 + 0.30 * l3 + 0.40 * l4;
}

namespace {

const CheckpointScore* find_label(const std::vector<CheckpointScore>& v,
                                  const std::string& label) {
  for (const auto& c : v) {
    if (c.label == label) return &c;
  }
  return nullptr;
}

void check_matched(const std::vector<CheckpointScore>& checkpoints) {
  const std::set<std::string>* reference = nullptr;
  std::string reference_label;
  for (const auto& c : checkpoints) {
    if (c.question_ids.empty()) continue;
    if (reference == nullptr) {
      reference = &c.question_ids;
      reference_label = c.label;
      continue;
    }
    if (c.question_ids != *reference) {
      std::vector<std::string> offending;
      std::set_symmetric_difference(reference->begin(), reference->end(),
                                    c.question_ids.begin(), c.question_ids.end(),
                                    std::back_inserter(offending));
      throw MatchedSetError("question sets differ between checkpoints " +
                                reference_label + " and " + c.label,
                            std::move(offending));
    }
  }
}

}  // namespace

double ladder_delta(const std::vector<CheckpointScore>& checkpoints,
                    const std::string& earliest_label,
                    const std::string& final_label) {
  const CheckpointScore* earliest = find_label(checkpoints, earliest_label);
  const CheckpointScore* final_cp = find_label(checkpoints, final_label);
  if (earliest == nullptr || final_cp == nullptr) {
    throw ScoringError("ladder endpoints missing: need " + earliest_label +
                       " and " + final_label);
  }
  check_matched(checkpoints);
  return final_cp->score - earliest->score;
}

std::vector<ReadoutRow> mechanism_readout(const std::vector<MechanismCell>& cells,
                                          const std::string& earliest_label,
                                          const std::string& final_label) {
  std::vector<ReadoutRow> rows;
  rows.reserve(cells.size());
  for (const auto& cell : cells) {
    ReadoutRow row;
    row.cell = cell.cell;
    row.n = cell.n;
    if (cell.nh) row.delta_nh = ladder_delta(*cell.nh, earliest_label, final_label);
    if (cell.gh) row.delta_gh = ladder_delta(*cell.gh, earliest_label, final_label);
    if (cell.fh) row.delta_fh = ladder_delta(*cell.fh, earliest_label, final_label);
    if (row.delta_fh && row.delta_nh) row.fh_minus_nh = *row.delta_fh - *row.delta_nh;
    if (row.delta_fh && row.delta_gh) row.fh_minus_gh = *row.delta_fh - *row.delta_gh;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace milkyway
