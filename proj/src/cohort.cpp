#include "milkyway/cohort.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "milkyway/serialize.hpp"

namespace milkyway {

namespace fs = std::filesystem;

namespace {

std::string read_text_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Question question_from_json(const Json& j) {
  Question q;
  q.question_id = j.at("question_id").get<std::string>();
  q.statement = j.at("statement").get<std::string>();
  q.answer_type = answer_type_from_key(j.at("answer_type").get<std::string>());
  if (j.contains("options")) {
    q.options = j.at("options").get<std::vector<std::string>>();
  }
  q.resolution_rule = j.value("resolution_rule", std::string{});
  q.issue_time = parse_timestamp(j.at("issue_time").get<std::string>());
  q.resolution_time = parse_timestamp(j.at("resolution_time").get<std::string>());
  for (const auto& c : j.at("checkpoints")) {
    q.checkpoints.push_back(parse_timestamp(c.get<std::string>()));
  }
  if (j.contains("outcome")) {
    const auto& o = j.at("outcome");
    Outcome outcome;
    outcome.valid = o.value("valid", false);
    if (o.contains("gold")) outcome.gold = prediction_value_from_json(o.at("gold"));
    if (o.contains("numeric_history")) {
      outcome.numeric_history = o.at("numeric_history").get<std::vector<double>>();
    }
    q.outcome = std::move(outcome);
  }
  return q;
}

}  // namespace

Json question_to_json(const Question& q) {
  Json j;
  j["question_id"] = q.question_id;
  j["statement"] = q.statement;
  j["answer_type"] = answer_type_key(q.answer_type);
  j["options"] = q.options;
  j["resolution_rule"] = q.resolution_rule;
  j["issue_time"] = format_timestamp(q.issue_time);
  j["resolution_time"] = format_timestamp(q.resolution_time);
  Json checkpoints = Json::array();
  for (Timestamp t : q.checkpoints) checkpoints.push_back(format_timestamp(t));
  j["checkpoints"] = std::move(checkpoints);
  if (q.outcome) {
    Json o;
    o["valid"] = q.outcome->valid;
    o["gold"] = to_json(q.outcome->gold);
    if (q.outcome->numeric_history) o["numeric_history"] = *q.outcome->numeric_history;
    j["outcome"] = std::move(o);
  }
  return j;
}

Cohort cohort_from_json(const Json& j) {
  Cohort cohort;
  cohort.raw = j;
  cohort.cohort_id = j.at("cohort_id").get<std::string>();
  for (const auto& qj : j.at("questions")) {
    cohort.questions.push_back(question_from_json(qj));
  }
  return cohort;
}

Cohort load_cohort(const fs::path& file) {
  Json j;
  try {
    j = Json::parse(read_text_file(file));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed cohort file: ") + e.what());
  }
  return cohort_from_json(j);
}

Ports ScriptedPorts::ports() {
  Ports p;
  p.agent = agent.get();
  p.editor = editor.get();
  p.memory_writer = memory_writer.get();
  p.checker = checker.get();
  return p;
}

ScriptedPorts build_scripted_ports(const Cohort& cohort) {
  ScriptedPorts out;
  out.agent = std::make_unique<ScriptedBaseAgent>();

  bool any_script = false;
  for (const auto& qj : cohort.raw.at("questions")) {
    if (!qj.contains("script")) continue;
    any_script = true;
    const std::string qid = qj.at("question_id").get<std::string>();
    for (const auto& run : qj.at("script").at("runs")) {
      ScriptRow row;
      row.default_payload = payload_from_json(run.at("default_payload"));
      row.evidence_query = run.value("evidence_query", std::string{});
      if (run.contains("branches")) {
        for (const auto& b : run.at("branches")) {
          row.branches.push_back({b.at("guidance_contains").get<std::string>(),
                                  payload_from_json(b.at("payload"))});
        }
      }
      out.agent->set_row(qid, run.at("checkpoint").get<int>(), std::move(row));
    }
  }
  if (!any_script) {
    throw ConfigError("cohort " + cohort.cohort_id +
                      " carries no scripts; use gateway ports instead");
  }

  if (cohort.raw.contains("editor_script")) {
    const auto& e = cohort.raw.at("editor_script");
    std::vector<PatchAdd> writes;
    for (const auto& w : e.at("writes")) {
      writes.push_back({axis_from_key(w.at("axis").get<std::string>()),
                        w.at("when").get<std::string>(),
                        w.at("guidance").get<std::string>()});
    }
    out.editor = std::make_unique<ScriptedEditor>(divergence_threshold_rule(
        e.value("min_divergence", 10.0), std::move(writes)));
  } else {
    out.editor = std::make_unique<ScriptedEditor>(
        [](const HarnessState&, const NoteHistory&) {
          return std::pair<PreResolutionSignal, HarnessPatch>{};
        });
  }

  out.memory_writer = std::make_unique<ScriptedMemoryWriter>(
      [](const std::string&, const NoteHistory& history) {
        std::ostringstream os;
        os << "Round " << history.notes.size()
           << " review: the latest estimate moved relative to the prior "
              "round. Keep tracking the same target metric, re-check the "
              "newest official reading before relying on secondary pages, "
              "and stay cautious until a direct confirmation appears.";
        return os.str();
      });
  out.checker = std::make_unique<NullChecker>();
  return out;
}

namespace {

std::vector<Condition> ordered_conditions(std::vector<Condition> conditions) {
  // FH first so paired GH budgets can be derived from its snapshots.
  std::vector<Condition> ordered;
  for (Condition c : {Condition::FH, Condition::NH, Condition::GH}) {
    if (std::find(conditions.begin(), conditions.end(), c) != conditions.end()) {
      ordered.push_back(c);
    }
  }
  return ordered;
}

Json config_echo(const RunConfig& config, const std::vector<Condition>& conditions,
                 const std::string& cohort_id) {
  Json j;
  j["cohort_id"] = cohort_id;
  Json conds = Json::array();
  for (Condition c : conditions) conds.push_back(condition_key(c));
  j["conditions"] = std::move(conds);
  j["budgets"] = {{"max_tool_calls", config.budgets.max_tool_calls},
                  {"max_context_tokens", config.budgets.max_context_tokens}};
  if (config.budgets.gh_byte_budget) {
    j["budgets"]["gh_byte_budget"] = *config.budgets.gh_byte_budget;
  }
  if (config.budgets.gh_write_calls) {
    j["budgets"]["gh_write_calls"] = *config.budgets.gh_write_calls;
  }
  j["chars_per_token"] = config.length_fn.chars_per_token;
  j["checkpoint_retries"] = config.checkpoint_retries;
  j["score_epsilon"] = config.score_epsilon;
  j["gh_fixed_byte_budget"] = config.gh_fixed_byte_budget;
  j["gh_write_calls"] = config.gh_write_calls;
  j["paired_gh_budget"] = config.paired_gh_budget;
  j["forbidden_vocabulary"] = config.forbidden_vocabulary;
  if (config.seed) j["seed"] = *config.seed;
  return j;
}

}  // namespace

CohortRunResult run_cohort(const Cohort& cohort, std::vector<Condition> conditions,
                           const fs::path& run_dir, const RunConfig& config,
                           Ports ports, EvidenceSource& evidence) {
  for (const auto& q : cohort.questions) q.check_schedule();
  const std::vector<Condition> order = ordered_conditions(std::move(conditions));
  if (order.empty()) throw ConfigError("no conditions requested");

  Ledger ledger(run_dir);
  ledger.write_run_artifact("cohort.json", canonical_dump(cohort.raw));
  ledger.write_run_artifact("config_echo.json",
                            canonical_dump(config_echo(config, order,
                                                       cohort.cohort_id)));

  CohortRunResult result;
  // (question, checkpoint) -> serialized FH harness bytes, for paired GH.
  std::map<std::pair<std::string, int>, std::int64_t> fh_sizes;

  for (Condition condition : order) {
    RunOptions options;
    if (condition == Condition::GH && config.paired_gh_budget && !fh_sizes.empty()) {
      auto sizes = fh_sizes;
      const std::int64_t fallback =
          config.budgets.gh_byte_budget.value_or(config.gh_fixed_byte_budget);
      options.gh_byte_budget = [sizes, fallback](const std::string& qid, int t) {
        auto it = sizes.find({qid, t});
        return it != sizes.end() ? it->second : fallback;
      };
    }

    std::vector<QuestionRunResult> runs;
    Json violations_report;
    violations_report["condition"] = condition_key(condition);
    violations_report["questions"] = Json::array();
    int total_violations = 0;

    for (const auto& question : cohort.questions) {
      QuestionRunResult run = run_question(question, condition, ports,
                                           config.budgets, evidence, config,
                                           &ledger, options);
      if (condition == Condition::FH) {
        for (const auto& rec : run.checkpoints) {
          if (!rec.executed || !rec.outcome.ok) continue;
          // Size of the snapshot written at this checkpoint.
          const fs::path snapshot =
              ledger.checkpoint_dir("fh", question.question_id, rec.checkpoint) /
              "harness_after.json";
          fh_sizes[{question.question_id, rec.checkpoint}] =
              static_cast<std::int64_t>(fs::file_size(snapshot));
        }
      }
      violations_report["questions"].push_back(
          {{"question_id", question.question_id},
           {"violations", static_cast<int>(run.violations.size())}});
      total_violations += static_cast<int>(run.violations.size());
      runs.push_back(std::move(run));
    }
    violations_report["total_violations"] = total_violations;
    ledger.write_run_artifact(std::string(condition_key(condition)) +
                                  "/forward_only_report.json",
                              canonical_dump(violations_report));
    result.by_condition[condition_key(condition)] = std::move(runs);
  }

  ledger.close();
  return result;
}

CohortRunResult run_scripted_cohort(const Cohort& cohort,
                                    std::vector<Condition> conditions,
                                    const fs::path& run_dir, const RunConfig& config,
                                    const fs::path& corpus_dir) {
  ScriptedPorts scripted = build_scripted_ports(cohort);
  std::unique_ptr<EvidenceSource> evidence;
  if (!corpus_dir.empty() && fs::is_directory(corpus_dir)) {
    evidence = std::make_unique<DirectoryEvidenceSource>(corpus_dir);
  } else {
    evidence = std::make_unique<EmptyEvidenceSource>();
  }
  return run_cohort(cohort, std::move(conditions), run_dir, config,
                    scripted.ports(), *evidence);
}

namespace {

double epsilon_from_echo(const fs::path& run_dir) {
  const fs::path echo = run_dir / "config_echo.json";
  if (!fs::exists(echo)) return 1e-9;
  Json j = Json::parse(read_text_file(echo));
  return j.value("score_epsilon", 1e-9);
}

}  // namespace

std::vector<ScoreRecord> score_run(const fs::path& run_dir,
                                   const std::string& condition) {
  const Cohort cohort = load_cohort(run_dir / "cohort.json");
  const double epsilon = epsilon_from_echo(run_dir);

  std::vector<ScoreRecord> records;
  for (const auto& q : cohort.questions) {
    for (int t = 1; t <= static_cast<int>(q.checkpoints.size()); ++t) {
      ScoreRecord rec;
      rec.question_id = q.question_id;
      rec.condition = condition;
      rec.checkpoint_label = q.checkpoint_label(t);
      rec.answer_type = q.answer_type;
      rec.resolved = q.outcome.has_value() && q.outcome->valid;
      rec.epsilon_used = epsilon;

      if (!rec.resolved) {
        rec.excluded_reason = "unresolved";
        records.push_back(std::move(rec));
        continue;
      }
      const fs::path ckpt_dir =
          run_dir / condition / q.question_id / ("ckpt_" + std::to_string(t));
      if (fs::exists(ckpt_dir / "skipped.json")) {
        rec.excluded_reason = "resolution_boundary";
        records.push_back(std::move(rec));
        continue;
      }
      const fs::path prediction_file = ckpt_dir / "prediction.json";
      if (!fs::exists(prediction_file)) {
        rec.excluded_reason = "checkpoint_failed";
        records.push_back(std::move(rec));
        continue;
      }
      const PredictionValue pred = prediction_value_from_json(
          Json::parse(read_text_file(prediction_file)).at("prediction"));

      if (q.answer_type == AnswerType::Numeric) {
        if (!q.outcome->numeric_history || q.outcome->numeric_history->size() != 8) {
          rec.excluded_reason = "invalid_history";
          records.push_back(std::move(rec));
          continue;
        }
        if (!pred.is_numeric() || !q.outcome->gold.is_numeric()) {
          rec.score = 0.0;  // malformed prediction kind is invalid, not excluded
        } else {
          NumericHistory history{*q.outcome->numeric_history, epsilon};
          rec.score = score_numeric(pred.numeric(), history,
                                    q.outcome->gold.numeric());
        }
      } else {
        if (!pred.is_choice() || !q.outcome->gold.is_choice()) {
          rec.score = 0.0;
        } else {
          rec.score = score_choice(q.outcome->gold.choice(), pred.choice(),
                                   static_cast<int>(q.options.size()),
                                   q.answer_type);
        }
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

namespace {

int label_days(const std::string& label) {
  // "T-4d" -> 4
  if (label.size() < 3 || label[0] != 'T' || label[1] != '-') return 0;
  return std::atoi(label.c_str() + 2);
}

}  // namespace

std::vector<LadderCell> ladder_from_run(const fs::path& run_dir, bool matched) {
  const Cohort cohort = load_cohort(run_dir / "cohort.json");

  std::vector<std::string> conditions;
  for (const char* key : {"nh", "gh", "fh"}) {
    if (fs::is_directory(run_dir / key)) conditions.emplace_back(key);
  }
  if (conditions.empty()) return {};

  // Ordered labels, earliest (largest k) first.
  std::set<std::string> label_set;
  for (const auto& q : cohort.questions) {
    for (int t = 1; t <= static_cast<int>(q.checkpoints.size()); ++t) {
      label_set.insert(q.checkpoint_label(t));
    }
  }
  std::vector<std::string> labels(label_set.begin(), label_set.end());
  std::sort(labels.begin(), labels.end(), [](const auto& a, const auto& b) {
    return label_days(a) > label_days(b);
  });

  // Scored ids per (condition, label) cell.
  std::map<std::string, std::vector<ScoreRecord>> by_condition;
  std::map<std::pair<std::string, std::string>, std::set<std::string>> cell_ids;
  for (const auto& condition : conditions) {
    auto records = score_run(run_dir, condition);
    for (const auto& r : records) {
      if (r.score.has_value()) {
        cell_ids[{condition, r.checkpoint_label}].insert(r.question_id);
      }
    }
    by_condition[condition] = std::move(records);
  }

  std::set<std::string> matched_ids;
  if (matched) {
    bool first = true;
    for (const auto& condition : conditions) {
      for (const auto& label : labels) {
        const auto& ids = cell_ids[{condition, label}];
        if (first) {
          matched_ids = ids;
          first = false;
        } else {
          std::set<std::string> inter;
          std::set_intersection(matched_ids.begin(), matched_ids.end(), ids.begin(),
                                ids.end(), std::inserter(inter, inter.begin()));
          matched_ids = std::move(inter);
        }
      }
    }
  }

  std::vector<LadderCell> cells;
  for (const auto& condition : conditions) {
    LadderCell cell;
    cell.cell = cohort.cohort_id;
    cell.condition = condition;
    cell.n = matched ? static_cast<int>(matched_ids.size()) : 0;
    for (const auto& label : labels) {
      double sum = 0.0;
      int count = 0;
      for (const auto& r : by_condition[condition]) {
        if (r.checkpoint_label != label || !r.score.has_value()) continue;
        if (matched && matched_ids.find(r.question_id) == matched_ids.end()) continue;
        sum += *r.score;
        ++count;
      }
      CheckpointScore cp;
      cp.label = label;
      cp.score = count > 0 ? sum / count : 0.0;
      if (matched) cp.question_ids = matched_ids;
      cell.checkpoints.push_back(std::move(cp));
      if (!matched) cell.n = std::max(cell.n, count);
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<ReadoutRow> readout_from_run(const fs::path& run_dir, bool matched) {
  std::vector<LadderCell> cells = ladder_from_run(run_dir, matched);
  if (cells.empty()) return {};
  MechanismCell cell;
  cell.cell = cells.front().cell;
  cell.n = cells.front().n;
  std::string earliest, final_label;
  for (const auto& c : cells) {
    if (c.checkpoints.empty()) continue;
    earliest = c.checkpoints.front().label;
    final_label = c.checkpoints.back().label;
    if (c.condition == "nh") cell.nh = c.checkpoints;
    if (c.condition == "gh") cell.gh = c.checkpoints;
    if (c.condition == "fh") cell.fh = c.checkpoints;
  }
  return mechanism_readout({cell}, earliest, final_label);
}

// --- bundled demo cohort ---

namespace {

Json payload_json(const PredictionValue& prediction,
                  std::vector<std::string> supporting,
                  std::vector<std::string> concerns,
                  std::vector<std::string> routes) {
  FinalizedPayload p;
  p.prediction = prediction;
  p.supporting_evidence = std::move(supporting);
  p.unresolved_concerns = std::move(concerns);
  p.evidence_routes = std::move(routes);
  return to_json(p);
}

void write_corpus_doc(const fs::path& corpus, const std::string& id,
                      const std::string& timestamp, const std::string& text) {
  std::ofstream out(corpus / (id + ".txt"));
  out << "id: " << id << "\n"
      << "timestamp: " << timestamp << "\n\n"
      << text << "\n";
}

}  // namespace

void write_demo_cohort(const fs::path& dir, int question_count) {
  if (question_count < 9) throw ConfigError("demo cohort needs at least 9 questions");
  fs::create_directories(dir);
  const fs::path corpus = dir / "corpus";
  fs::create_directories(corpus);

  const std::vector<std::string> checkpoint_times = {
      "2026-05-01T00:00:00Z", "2026-05-02T00:00:00Z", "2026-05-03T00:00:00Z",
      "2026-05-04T00:00:00Z"};
  const std::string resolution = "2026-05-05T00:00:00Z";
  const std::string guided_key = "official surface";

  Json cohort;
  cohort["cohort_id"] = "demo";
  cohort["editor_script"] = {
      {"min_divergence", 3.0},
      {"writes",
       Json::array({{{"axis", "E"},
                     {"when", "related pages expose a metric-mismatched surface"},
                     {"guidance",
                      "Route first to the official surface that matches the "
                      "benchmark metric and treat ranking pages only as "
                      "background."}}})}};
  cohort["questions"] = Json::array();

  for (int i = 1; i <= question_count; ++i) {
    char qid_buf[16];
    std::snprintf(qid_buf, sizeof(qid_buf), "q%02d", i % 1000);
    const std::string qid = qid_buf;

    Json q;
    q["question_id"] = qid;
    q["resolution_rule"] = "Resolves to the official reading on 2026-05-05.";
    q["issue_time"] = checkpoint_times.front();
    q["resolution_time"] = resolution;
    q["checkpoints"] = checkpoint_times;

    Json runs = Json::array();
    auto add_run = [&](int t, const Json& default_payload,
                       const std::optional<Json>& guided_payload) {
      Json run;
      run["checkpoint"] = t;
      run["evidence_query"] = qid;
      run["default_payload"] = default_payload;
      if (guided_payload) {
        run["branches"] = Json::array(
            {{{"guidance_contains", guided_key}, {"payload", *guided_payload}}});
      }
      runs.push_back(std::move(run));
    };

    if (i <= 4) {
      // Binary controls: stable wrong answer, guidance-insensitive.
      q["statement"] = "Will the tracked indicator " + qid +
                       " exceed its threshold by the resolution date?";
      q["answer_type"] = "binary_choice";
      q["options"] = Json::array({"No", "Yes"});
      q["outcome"] = {{"valid", true},
                      {"gold", {{"kind", "choice"}, {"selected", {0}}}}};
      const Json payload = payload_json(
          PredictionValue::choice_value({1}),
          {"headline coverage suggests an exceedance"},
          {"no direct reading of the indicator observed"}, {"news search"});
      for (int t = 1; t <= 4; ++t) add_run(t, payload, std::nullopt);
    } else if (i <= 8) {
      // Multiple choice: drifting wrong defaults, correct under guidance.
      const bool difficult = i > 6;
      const int option_count = difficult ? 6 : 4;
      q["statement"] = "Which category will the " + qid +
                       " bulletin report for the resolution date?";
      q["answer_type"] = difficult ? "difficult_mc" : "simple_mc";
      Json options = Json::array();
      for (int k = 0; k < option_count; ++k) {
        options.push_back("Category " + std::string(1, static_cast<char>('A' + k)));
      }
      q["options"] = std::move(options);
      std::vector<int> gold = difficult ? std::vector<int>{0, 1} : std::vector<int>{0};
      q["outcome"] = {{"valid", true},
                      {"gold", {{"kind", "choice"}, {"selected", gold}}}};
      const Json guided = payload_json(
          PredictionValue::choice_value(gold),
          {"official bulletin category matched directly"}, {},
          {"official bulletin page"});
      const Json wrong1 = payload_json(PredictionValue::choice_value({1}),
                                       {"ranking page points elsewhere"},
                                       {"category definition unclear"},
                                       {"ranking page"});
      const Json wrong2 = payload_json(PredictionValue::choice_value({2}),
                                       {"secondary summary points elsewhere"},
                                       {"category definition unclear"},
                                       {"secondary summary"});
      const Json wrong3 = payload_json(PredictionValue::choice_value({3}),
                                       {"stale summary reused"}, {},
                                       {"secondary summary"});
      add_run(1, wrong1, std::nullopt);
      add_run(2, wrong2, guided);
      add_run(3, wrong2, guided);
      add_run(4, wrong3, guided);
    } else {
      // Numeric: defaults overshoot and drift; guided runs track gold.
      const double gold = 20.0 + 3.0 * i;
      q["statement"] = "Forecast the official " + qid +
                       " metric value for 2026-05-05.";
      q["answer_type"] = "numeric";
      q["options"] = Json::array();
      Json history = Json::array({gold, gold - 3.5, gold - 2.5, gold - 1.5,
                                  gold - 0.5, gold + 0.5, gold + 1.5, gold + 2.5});
      q["outcome"] = {{"valid", true},
                      {"gold", {{"kind", "numeric"}, {"value", gold}}},
                      {"numeric_history", std::move(history)}};
      auto numeric_payload = [&](double value, const char* route) {
        return payload_json(PredictionValue::numeric_value(value),
                            {"latest reading interpolated"},
                            {"no direct same-metric point observed"}, {route});
      };
      const Json guided = numeric_payload(gold + 0.5, "official metric surface");
      add_run(1, numeric_payload(gold + 5.0, "ranking page"), std::nullopt);
      add_run(2, numeric_payload(gold + 1.0, "ranking page"), guided);
      add_run(3, numeric_payload(gold + 4.2, "ranking page"), guided);
      add_run(4, numeric_payload(gold + 4.5, "ranking page"), guided);
    }
    Json script;
    script["runs"] = std::move(runs);
    q["script"] = std::move(script);
    cohort["questions"].push_back(std::move(q));

    write_corpus_doc(corpus, "doc-" + qid + "-early", "2026-04-28T08:00:00Z",
                     "Background reading for " + qid +
                         ": baseline values and definitions for the target "
                         "metric.");
    write_corpus_doc(corpus, "doc-" + qid + "-mid", "2026-05-02T00:00:00Z",
                     "Fresh reading posted for " + qid +
                         " on the official page; compare against the baseline.");
    // Trap: dated after every checkpoint; a forward-only source must never
    // surface it.
    write_corpus_doc(corpus, "doc-" + qid + "-trap", "2026-05-06T00:00:00Z",
                     "Late revision for " + qid +
                         " published after resolution; reveals the outcome.");
  }

  std::ofstream out(dir / "cohort.json");
  out << canonical_dump(cohort);
}

}  // namespace milkyway
