#include "milkyway/loop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "milkyway/serialize.hpp"

namespace milkyway {

std::string Question::checkpoint_label(int index) const {
  const Timestamp tau = checkpoints.at(static_cast<std::size_t>(index) - 1);
  const double days = static_cast<double>(resolution_time - tau) / 86400.0;
  const int k = std::max(1, static_cast<int>(std::llround(days)));
  return "T-" + std::to_string(k) + "d";
}

void Question::check_schedule() const {
  if (checkpoints.empty()) {
    throw std::invalid_argument("question " + question_id + " has no checkpoints");
  }
  if (issue_time != checkpoints.front()) {
    throw std::invalid_argument("question " + question_id +
                                ": first checkpoint must equal issue time");
  }
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    if (checkpoints[i] <= checkpoints[i - 1]) {
      throw std::invalid_argument("question " + question_id +
                                  ": checkpoints not strictly increasing");
    }
  }
  if (checkpoints.front() >= resolution_time) {
    throw std::invalid_argument("question " + question_id +
                                ": resolution precedes every checkpoint");
  }
}

const char* condition_key(Condition c) {
  switch (c) {
    case Condition::NH: return "nh";
    case Condition::GH: return "gh";
    default: return "fh";
  }
}

Condition condition_from_key(const std::string& key) {
  if (key == "nh" || key == "NH") return Condition::NH;
  if (key == "gh" || key == "GH") return Condition::GH;
  if (key == "fh" || key == "FH") return Condition::FH;
  throw std::invalid_argument("unknown condition: " + key);
}

ConditionState initial_condition_state(Condition condition,
                                       const std::string& question_id,
                                       std::optional<HarnessState> seed) {
  ConditionState state;
  state.condition = condition;
  if (condition == Condition::FH) {
    if (seed) {
      state.harness = std::move(*seed);
      state.harness.question_id = question_id;
    } else {
      state.harness.question_id = question_id;
    }
  }
  return state;
}

namespace {

std::string guidance_for(const ConditionState& state) {
  switch (state.condition) {
    case Condition::NH: return "";
    case Condition::GH: return state.memory_blob;
    default: return render_harness(state.harness);
  }
}

}  // namespace

CheckpointOutcome run_checkpoint(const Question& question, int t,
                                 const ConditionState& state, Ports& ports,
                                 const Budgets& budgets, EvidenceSource& evidence,
                                 const RunConfig& config) {
  CheckpointOutcome out;
  const Timestamp tau = question.checkpoints.at(static_cast<std::size_t>(t) - 1);
  out.guidance = guidance_for(state);
  out.prompt = assemble_base_prompt(config.prior, question, out.guidance);
  try {
    auto [trace, payload] = ports.agent->run(question, tau, out.guidance, evidence,
                                             budgets);
    out.trace = std::move(trace);
    out.payload = std::move(payload);
    if (out.trace.prompt_tokens == 0) {
      out.trace.prompt_tokens = config.length_fn.tokens(out.prompt);
    }
    out.note = construct_note(out.trace, out.payload, question.question_id,
                              /*checkpoint_index=*/0, tau);
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.failure = e.what();
  }
  return out;
}

UpdateRecord run_update(const ConditionState& state, const NoteHistory& history,
                        Ports& ports, const Budgets& budgets, const RunConfig& config,
                        std::int64_t gh_byte_budget, int checkpoint) {
  if (history.notes.size() < 2) {
    throw std::logic_error("run_update requires at least two notes");
  }
  UpdateRecord rec;
  rec.next = state;

  if (state.condition == Condition::NH) return rec;

  if (state.condition == Condition::FH) {
    HarnessPatch patch;  // null unless the editor yields one
    try {
      rec.raw_editor_output = ports.editor->propose(state.harness, history);
    } catch (const std::exception& e) {
      rec.editor_failed = true;
      rec.failure_detail = e.what();
    }
    if (!rec.editor_failed) {
      try {
        auto [signal, parsed] = parse_editor_output(rec.raw_editor_output);
        rec.signal = std::move(signal);
        patch = std::move(parsed);
      } catch (const ParseError& e) {
        rec.parse_failed = true;
        rec.failure_detail = e.what();
      }
    }
    const ContentValidator rule = default_content_rule(config.content_rule);
    auto [next_harness, report] = apply_patch(state.harness, patch, rule, checkpoint);
    auto [validated, drops] = validate_patch(state.harness, patch, rule);
    rec.validated_patch = std::move(validated);
    rec.report = std::move(report);
    rec.applied = rec.report.applied_total() > 0;
    rec.next.harness = std::move(next_harness);
    return rec;
  }

  // GH: one bounded write of the full replacement blob.
  rec.blob_bytes_before = static_cast<std::int64_t>(state.memory_blob.size());
  const int write_budget = budgets.gh_write_calls.value_or(config.gh_write_calls);
  if (write_budget < 1) {
    rec.write_dropped = true;
    rec.blob_bytes_after = rec.blob_bytes_before;
    return rec;
  }
  rec.write_attempted = true;
  std::string blob;
  try {
    blob = ports.memory_writer->write(state.memory_blob, history);
  } catch (const std::exception& e) {
    rec.write_dropped = true;
    rec.failure_detail = e.what();
    rec.blob_bytes_after = rec.blob_bytes_before;
    return rec;
  }
  if (static_cast<std::int64_t>(blob.size()) > gh_byte_budget) {
    blob.resize(static_cast<std::size_t>(gh_byte_budget));
    rec.truncated = true;
  }
  rec.next.memory_blob = std::move(blob);
  rec.blob_bytes_after = static_cast<std::int64_t>(rec.next.memory_blob.size());
  return rec;
}

namespace {

void ledger_checkpoint(Ledger& ledger, const std::string& condition,
                       const Question& question, const CheckpointRecord& rec,
                       const ConditionState& state_after) {
  const std::string& qid = question.question_id;
  const int t = rec.checkpoint;
  if (!rec.outcome.ok) {
    Json failed;
    failed["checkpoint"] = t;
    failed["checkpoint_time"] = format_timestamp(rec.time);
    failed["reason"] = rec.outcome.failure;
    ledger.write_artifact(condition, qid, t, "failed.json", canonical_dump(failed));
  } else {
    ledger.write_artifact(condition, qid, t, "prompt.txt", rec.outcome.prompt);
    ledger.write_artifact(condition, qid, t, "guidance.txt", rec.outcome.guidance);
    ledger.write_artifact(condition, qid, t, "trace.json",
                          canonical_dump(to_json(rec.outcome.trace)));
    ledger.write_artifact(condition, qid, t, "payload.json",
                          canonical_dump(to_json(rec.outcome.payload)));
    ledger.write_artifact(condition, qid, t, "note.json",
                          canonical_dump(to_json(rec.outcome.note)));
    Json prediction;
    prediction["question_id"] = qid;
    prediction["checkpoint"] = t;
    prediction["checkpoint_time"] = format_timestamp(rec.time);
    prediction["checkpoint_label"] = question.checkpoint_label(t);
    prediction["prediction"] = to_json(rec.outcome.note.prediction);
    ledger.write_artifact(condition, qid, t, "prediction.json",
                          canonical_dump(prediction));
  }
  if (rec.update) {
    const UpdateRecord& u = *rec.update;
    if (state_after.condition == Condition::FH) {
      ledger.write_artifact(condition, qid, t, "editor_raw.txt", u.raw_editor_output);
      ledger.write_artifact(condition, qid, t, "signal.json",
                            canonical_dump(to_json(u.signal)));
      ledger.write_artifact(condition, qid, t, "patch.json",
                            canonical_dump(to_json(u.validated_patch)));
      Json report = to_json(u.report);
      report["editor_failed"] = u.editor_failed;
      report["parse_failed"] = u.parse_failed;
      if (!u.failure_detail.empty()) report["failure_detail"] = u.failure_detail;
      ledger.write_artifact(condition, qid, t, "apply_report.json",
                            canonical_dump(report));
    } else if (state_after.condition == Condition::GH) {
      Json write;
      write["write_attempted"] = u.write_attempted;
      write["write_dropped"] = u.write_dropped;
      write["truncated"] = u.truncated;
      write["blob_bytes_before"] = u.blob_bytes_before;
      write["blob_bytes_after"] = u.blob_bytes_after;
      if (!u.failure_detail.empty()) write["failure_detail"] = u.failure_detail;
      ledger.write_artifact(condition, qid, t, "memory_write.json",
                            canonical_dump(write));
    }
  }
  if (state_after.condition == Condition::FH) {
    ledger.write_harness_snapshot(condition, qid, t, state_after.harness);
  } else if (state_after.condition == Condition::GH) {
    ledger.write_artifact(condition, qid, t, "memory_blob.txt",
                          state_after.memory_blob);
  }
  ledger.write_stats(condition, qid, t, rec.stats);
}

}  // namespace

QuestionRunResult run_question(const Question& question, Condition condition,
                               Ports& ports, const Budgets& budgets,
                               EvidenceSource& evidence, const RunConfig& config,
                               Ledger* ledger, RunOptions options) {
  question.check_schedule();
  budgets.validate();
  if (!options.gh_byte_budget) {
    const std::int64_t fixed =
        budgets.gh_byte_budget.value_or(config.gh_fixed_byte_budget);
    options.gh_byte_budget = [fixed](const std::string&, int) { return fixed; };
  }

  std::optional<HarnessState> seed;
  if (condition == Condition::FH && config.initial_harness_file) {
    std::ifstream in(*config.initial_harness_file);
    if (!in) throw ConfigError("cannot open initial harness snapshot");
    seed = harness_state_from_json(Json::parse(in));
  }

  QuestionRunResult result;
  result.trajectory.question_id = question.question_id;
  result.history.question_id = question.question_id;
  ConditionState state =
      initial_condition_state(condition, question.question_id, std::move(seed));
  const std::string cond_key = condition_key(condition);

  const int total = static_cast<int>(question.checkpoints.size());
  for (int t = 1; t <= total; ++t) {
    CheckpointRecord rec;
    rec.checkpoint = t;
    rec.time = question.checkpoints[static_cast<std::size_t>(t) - 1];
    // Forward-only boundary: runs at or after resolution are excluded.
    if (rec.time >= question.resolution_time) {
      rec.executed = false;
      if (ledger != nullptr) {
        Json skipped;
        skipped["checkpoint"] = t;
        skipped["checkpoint_time"] = format_timestamp(rec.time);
        skipped["reason"] = "at_or_after_resolution";
        ledger->write_artifact(cond_key, question.question_id, t, "skipped.json",
                               canonical_dump(skipped));
      }
      result.checkpoints.push_back(std::move(rec));
      continue;
    }
    rec.executed = true;

    ForwardOnlyAuditor auditor(evidence);
    CheckpointOutcome outcome;
    for (int attempt = 0; attempt <= config.checkpoint_retries; ++attempt) {
      outcome = run_checkpoint(question, t, state, ports, budgets, auditor, config);
      if (outcome.ok) break;
    }
    rec.auditor_violations = static_cast<int>(auditor.violations().size());
    for (const auto& v : auditor.violations()) result.violations.push_back(v);
    outcome.trace.evidence_violations = rec.auditor_violations;

    if (outcome.ok) {
      outcome.note.checkpoint_index = static_cast<int>(result.history.notes.size()) + 1;
      result.history = append_note(result.history, outcome.note);
      result.trajectory.entries.push_back(
          {t, rec.time, outcome.note.prediction});
      rec.stats.tool_calls = outcome.trace.tool_calls;
      rec.stats.llm_calls = outcome.trace.llm_calls;
      rec.stats.prompt_tokens = outcome.trace.prompt_tokens;

      if (result.history.notes.size() >= 2) {
        rec.update = run_update(state, result.history, ports, budgets, config,
                                options.gh_byte_budget(question.question_id, t), t);
        state = rec.update->next;
      }
    }
    rec.outcome = std::move(outcome);
    if (ledger != nullptr) {
      ledger_checkpoint(*ledger, cond_key, question, rec, state);
    }
    result.checkpoints.push_back(std::move(rec));
  }

  result.final_state = std::move(state);
  return result;
}

PostResolutionResult run_post_resolution_check(const HarnessState& final_state,
                                               const NoteHistory& history,
                                               const Outcome& outcome,
                                               CheckerPort& checker,
                                               const RunConfig& config) {
  if (!outcome.valid) {
    throw std::invalid_argument("post-resolution check requires a valid outcome");
  }
  PostResolutionResult result;
  result.checked = final_state;

  HarnessPatch patch;
  try {
    result.raw_checker_output = checker.check(final_state, history, outcome);
    auto [signal, parsed] = parse_editor_output(result.raw_checker_output);
    (void)signal;  // checkers may omit or reuse the signal block; not consumed
    patch = std::move(parsed);
  } catch (const std::exception& e) {
    result.failure = e.what();
    return result;  // unchecked: checked == final state
  }

  const int checkpoint = history.notes.empty()
                             ? 1
                             : history.notes.back().checkpoint_index + 1;
  const ContentValidator rule = default_content_rule(config.content_rule);
  auto [checked, report] = apply_patch(final_state, patch, rule, checkpoint);
  auto [validated, drops] = validate_patch(final_state, patch, rule);
  result.checked = std::move(checked);
  result.report = std::move(report);
  result.validated_patch = std::move(validated);
  result.checked_ok = true;
  return result;
}

}  // namespace milkyway
