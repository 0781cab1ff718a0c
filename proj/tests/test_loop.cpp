#include <doctest.h>

#include <filesystem>

#include "milkyway/loop.hpp"
#include "milkyway/serialize.hpp"

using namespace milkyway;
namespace fs = std::filesystem;

namespace {

Question make_question(int checkpoint_count, const std::string& qid = "q1") {
  Question q;
  q.question_id = qid;
  q.statement = "Forecast the official metric.";
  q.answer_type = AnswerType::Numeric;
  q.resolution_rule = "Official reading on 2026-05-05.";
  q.issue_time = parse_timestamp("2026-05-01");
  q.resolution_time = parse_timestamp("2026-05-05");
  for (int t = 0; t < checkpoint_count; ++t) {
    q.checkpoints.push_back(q.issue_time + t * 86400);
  }
  Outcome outcome;
  outcome.valid = true;
  outcome.gold = PredictionValue::numeric_value(10.0);
  outcome.numeric_history = std::vector<double>{10, 9, 9.5, 10.5, 11, 8.5, 10.2, 9.8};
  q.outcome = outcome;
  return q;
}

FinalizedPayload numeric_payload(double value) {
  FinalizedPayload p;
  p.prediction = PredictionValue::numeric_value(value);
  p.unresolved_concerns = {"no direct same-metric point observed"};
  return p;
}

// Agent whose prediction depends on the guidance only through an optional
// branch key; defaults follow a per-run schedule and it counts invocations.
class CountingScriptedAgent : public BaseAgentPort {
 public:
  CountingScriptedAgent(std::vector<double> defaults, std::string key = "",
                        double guided = 0.0)
      : defaults_(std::move(defaults)), key_(std::move(key)), guided_(guided) {}

  std::pair<RunTrace, FinalizedPayload> run(const Question&, Timestamp,
                                            const std::string& guidance,
                                            EvidenceSource&, const Budgets&) override {
    const std::size_t index = std::min<std::size_t>(runs, defaults_.size() - 1);
    ++runs;
    RunTrace trace;
    trace.llm_calls = 1;
    const bool branch = !key_.empty() && guidance.find(key_) != std::string::npos;
    return {trace, numeric_payload(branch ? guided_ : defaults_[index])};
  }

  std::size_t runs = 0;

 private:
  std::vector<double> defaults_;
  std::string key_;
  double guided_;
};

class CountingEditor : public EditorPort {
 public:
  explicit CountingEditor(EditorRule rule) : inner_(std::move(rule)) {}
  std::string propose(const HarnessState& state, const NoteHistory& history) override {
    ++proposals;
    auto [signal, patch] = inner_(state, history);
    return editor_document(signal, patch);
  }
  int proposals = 0;

 private:
  EditorRule inner_;
};

class FailingAgent : public BaseAgentPort {
 public:
  explicit FailingAgent(BaseAgentPort& inner, int fail_at_run)
      : inner_(&inner), fail_at_(fail_at_run) {}
  std::pair<RunTrace, FinalizedPayload> run(const Question& q, Timestamp t,
                                            const std::string& guidance,
                                            EvidenceSource& e,
                                            const Budgets& b) override {
    if (++count_ == fail_at_) throw std::runtime_error("transport down");
    return inner_->run(q, t, guidance, e, b);
  }

 private:
  BaseAgentPort* inner_;
  int fail_at_;
  int count_ = 0;
};

struct LoopFixture {
  CountingScriptedAgent agent{{35.2, 50.2}, "official surface", 10.5};
  CountingEditor editor{divergence_threshold_rule(
      10.0, {{Axis::E, "rankings mislead",
              "route first to the official surface that matches the metric"}})};
  ScriptedMemoryWriter writer{[](const std::string&, const NoteHistory& h) {
    return "round " + std::to_string(h.notes.size()) + " reflections in prose";
  }};
  NullChecker checker;
  EmptyEvidenceSource evidence;
  RunConfig config = default_run_config();

  Ports ports() {
    Ports p;
    p.agent = &agent;
    p.editor = &editor;
    p.memory_writer = &writer;
    p.checker = &checker;
    return p;
  }
};

}  // namespace

TEST_CASE("single-checkpoint question never invokes the editor") {
  LoopFixture fx;
  Question q = make_question(1);
  Ports ports = fx.ports();
  auto result = run_question(q, Condition::FH, ports, fx.config.budgets, fx.evidence,
                             fx.config);
  CHECK(result.trajectory.entries.size() == 1);
  CHECK(fx.editor.proposals == 0);
  CHECK(result.final_state.harness.version == 0);
}

TEST_CASE("editor runs once per checkpoint from the second note onward") {
  LoopFixture fx;
  Question q = make_question(4);
  Ports ports = fx.ports();
  auto result = run_question(q, Condition::FH, ports, fx.config.budgets, fx.evidence,
                             fx.config);
  CHECK(result.trajectory.entries.size() == 4);
  CHECK(fx.editor.proposals == 3);  // t = 2, 3, 4
  // the divergence write landed and was consumed from checkpoint 3 on
  CHECK(result.final_state.harness.active_count(Axis::E) == 1);
  CHECK(result.trajectory.entries[0].prediction.numeric() == 35.2);
  CHECK(result.trajectory.entries[1].prediction.numeric() == 50.2);
  CHECK(result.trajectory.entries[2].prediction.numeric() == 10.5);
  CHECK(result.trajectory.entries[3].prediction.numeric() == 10.5);
}

TEST_CASE("guidance block stays canonically empty at checkpoints 1 and 2 under FH") {
  LoopFixture fx;
  Question q = make_question(4);
  Ports ports = fx.ports();
  auto result = run_question(q, Condition::FH, ports, fx.config.budgets, fx.evidence,
                             fx.config);
  CHECK(result.checkpoints[0].outcome.guidance == kEmptyGuidanceBlock);
  CHECK(result.checkpoints[1].outcome.guidance == kEmptyGuidanceBlock);
  CHECK(result.checkpoints[2].outcome.guidance != kEmptyGuidanceBlock);
  // prompts at 1-2 equal the NH prompts byte for byte
  CountingScriptedAgent nh_agent{{35.2, 50.2}};
  Ports nh_ports = ports;
  nh_ports.agent = &nh_agent;
  auto nh = run_question(q, Condition::NH, nh_ports, fx.config.budgets, fx.evidence,
                         fx.config);
  CHECK(result.checkpoints[0].outcome.prompt == nh.checkpoints[0].outcome.prompt);
  CHECK(result.checkpoints[1].outcome.prompt == nh.checkpoints[1].outcome.prompt);
}

TEST_CASE("guidance-insensitive agents yield identical NH and FH trajectories") {
  Question q = make_question(4);
  RunConfig config = default_run_config();
  EmptyEvidenceSource evidence;

  CountingScriptedAgent agent_a{{17.5, 40.0, 22.0, 31.0}};  // no branch key
  CountingScriptedAgent agent_b{{17.5, 40.0, 22.0, 31.0}};
  CountingEditor editor{divergence_threshold_rule(
      0.0, {{Axis::U, "always", "cap confidence while evidence is thin"}})};
  ScriptedMemoryWriter writer{[](const std::string&, const NoteHistory&) {
    return std::string("prose");
  }};
  NullChecker checker;

  Ports nh{&agent_a, &editor, &writer, &checker};
  Ports fh{&agent_b, &editor, &writer, &checker};
  auto nh_result = run_question(q, Condition::NH, nh, config.budgets, evidence, config);
  auto fh_result = run_question(q, Condition::FH, fh, config.budgets, evidence, config);

  REQUIRE(nh_result.trajectory.entries.size() == fh_result.trajectory.entries.size());
  for (std::size_t i = 0; i < nh_result.trajectory.entries.size(); ++i) {
    CHECK(nh_result.trajectory.entries[i].prediction ==
          fh_result.trajectory.entries[i].prediction);
  }
}

TEST_CASE("a failed checkpoint is skipped and leaves state untouched") {
  LoopFixture fx;
  Question q = make_question(4);
  FailingAgent failing(fx.agent, 3);  // third run fails
  Ports ports = fx.ports();
  ports.agent = &failing;
  auto result = run_question(q, Condition::FH, ports, fx.config.budgets, fx.evidence,
                             fx.config);
  CHECK(result.trajectory.entries.size() == 3);  // checkpoints 1, 2, 4
  CHECK(result.history.notes.size() == 3);
  CHECK_FALSE(result.checkpoints[2].outcome.ok);
  CHECK(result.checkpoints[2].outcome.failure == "transport down");
  // note indices stay contiguous
  CHECK(result.history.notes[2].checkpoint_index == 3);
  CHECK(result.history.notes[2].checkpoint_time == q.checkpoints[3]);
}

TEST_CASE("NH update is a no-op and GH writes are byte-bounded") {
  LoopFixture fx;
  Question q = make_question(3);

  NoteHistory history;
  history.question_id = "q1";
  for (int i = 1; i <= 2; ++i) {
    CheckpointNote note;
    note.question_id = "q1";
    note.checkpoint_index = i;
    note.checkpoint_time = q.checkpoints[i - 1];
    note.prediction = PredictionValue::numeric_value(i);
    history = append_note(history, note);
  }

  ConditionState nh_state = initial_condition_state(Condition::NH, "q1");
  Ports ports = fx.ports();
  UpdateRecord nh = run_update(nh_state, history, ports, fx.config.budgets, fx.config,
                               1024, 2);
  CHECK(nh.next.memory_blob.empty());
  CHECK(nh.next.harness.version == 0);

  ConditionState gh_state = initial_condition_state(Condition::GH, "q1");
  UpdateRecord gh = run_update(gh_state, history, ports, fx.config.budgets, fx.config,
                               10, 2);
  CHECK(gh.truncated);
  CHECK(gh.next.memory_blob.size() == 10);
  CHECK(gh.blob_bytes_after == 10);

  RunConfig no_writes = fx.config;
  no_writes.gh_write_calls = 0;
  UpdateRecord dropped = run_update(gh_state, history, ports, fx.config.budgets,
                                    no_writes, 1024, 2);
  CHECK(dropped.write_dropped);
  CHECK(dropped.next.memory_blob.empty());
}

TEST_CASE("editor failure and parse failure degrade to the null patch") {
  Question q = make_question(3);
  RunConfig config = default_run_config();
  EmptyEvidenceSource evidence;
  CountingScriptedAgent agent{{5.0, 25.0, 6.0}};
  ScriptedMemoryWriter writer{[](const std::string&, const NoteHistory&) {
    return std::string();
  }};
  NullChecker checker;

  struct ThrowingEditor : EditorPort {
    std::string propose(const HarnessState&, const NoteHistory&) override {
      throw std::runtime_error("editor down");
    }
  } throwing;
  struct JunkEditor : EditorPort {
    std::string propose(const HarnessState&, const NoteHistory&) override {
      return "not a structured document";
    }
  } junk;

  for (EditorPort* editor : {static_cast<EditorPort*>(&throwing),
                             static_cast<EditorPort*>(&junk)}) {
    Ports ports{&agent, editor, &writer, &checker};
    auto result = run_question(q, Condition::FH, ports, config.budgets, evidence,
                               config);
    CHECK(result.trajectory.entries.size() == 3);  // prediction flow unaffected
    CHECK(result.final_state.harness.version == 0);
    REQUIRE(result.checkpoints[1].update.has_value());
    const UpdateRecord& u = *result.checkpoints[1].update;
    CHECK((u.editor_failed || u.parse_failed));
    CHECK(u.validated_patch.is_null());
  }
}

TEST_CASE("the retry knob re-runs a transiently failing checkpoint") {
  LoopFixture fx;
  Question q = make_question(2);
  FailingAgent flaky(fx.agent, 1);  // first attempt fails, retry succeeds
  Ports ports = fx.ports();
  ports.agent = &flaky;

  RunConfig with_retry = fx.config;
  with_retry.checkpoint_retries = 1;
  auto result = run_question(q, Condition::NH, ports, with_retry.budgets,
                             fx.evidence, with_retry);
  CHECK(result.trajectory.entries.size() == 2);
  CHECK(result.checkpoints[0].outcome.ok);
}

TEST_CASE("checkpoints at or after an early resolution are excluded") {
  LoopFixture fx;
  Question q = make_question(4);
  q.resolution_time = q.checkpoints[2];  // resolves early, at the third checkpoint
  Ports ports = fx.ports();
  auto result = run_question(q, Condition::NH, ports, fx.config.budgets, fx.evidence,
                             fx.config);
  CHECK(result.trajectory.entries.size() == 2);
  CHECK_FALSE(result.checkpoints[2].executed);
  CHECK_FALSE(result.checkpoints[3].executed);
}

TEST_CASE("post-resolution check: null, scripted, and invalid-reference paths") {
  RunConfig config = default_run_config();
  HarnessState final_state;
  final_state.question_id = "q1";
  HarnessPatch seed;
  seed.adds = {{Axis::E, "rankings shown", "trust the ranking page for the value"},
               {Axis::U, "thin evidence", "cap confidence"}};
  final_state = apply_patch(final_state, seed).first;

  NoteHistory history;
  Outcome outcome;
  outcome.valid = true;
  outcome.gold = PredictionValue::numeric_value(4.48);

  NullChecker null_checker;
  auto unchanged = run_post_resolution_check(final_state, history, outcome,
                                             null_checker, config);
  CHECK(unchanged.checked == final_state);
  CHECK(unchanged.checked_ok);

  // rule table: deprecate entries whose guidance endorses ranking pages
  ScriptedChecker scripted([](const HarnessState& state, const NoteHistory&,
                              const Outcome&) {
    HarnessPatch patch;
    for (const auto& e : state.entries) {
      if (e.status == EntryStatus::Active &&
          e.guidance.find("ranking page") != std::string::npos) {
        patch.deprecates.push_back({e.id, "contradicted by realized outcome"});
      }
    }
    return patch;
  });
  auto checked = run_post_resolution_check(final_state, history, outcome, scripted,
                                           config);
  CHECK(checked.checked_ok);
  CHECK(checked.report.applied_deprecates == 1);
  CHECK(checked.checked.find("E1")->status == EntryStatus::Deprecated);
  CHECK(checked.checked.find("U1")->status == EntryStatus::Active);

  ScriptedChecker invalid([](const HarnessState&, const NoteHistory&, const Outcome&) {
    HarnessPatch patch;
    patch.deprecates = {{"Z9", "no such entry"}};
    return patch;
  });
  auto degraded = run_post_resolution_check(final_state, history, outcome, invalid,
                                            config);
  CHECK(degraded.checked == final_state);
  REQUIRE(degraded.report.dropped_ops.size() == 1);
  CHECK(degraded.report.dropped_ops[0].reason == DropReason::InvalidReference);

  struct ThrowingChecker : CheckerPort {
    std::string check(const HarnessState&, const NoteHistory&, const Outcome&) override {
      throw std::runtime_error("checker down");
    }
  } throwing;
  auto unchecked = run_post_resolution_check(final_state, history, outcome, throwing,
                                             config);
  CHECK_FALSE(unchecked.checked_ok);
  CHECK(unchecked.checked == final_state);

  Outcome invalid_outcome;
  CHECK_THROWS_AS(run_post_resolution_check(final_state, history, invalid_outcome,
                                            null_checker, config),
                  std::invalid_argument);
}
