// Command-line surface for the pre-resolution adaptation runtime: cohort
// runs under the NH/GH/FH conditions, ledger-replay scoring and readouts,
// artifact audits, and the post-resolution checking pass.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "milkyway/cohort.hpp"
#include "milkyway/gateway.hpp"
#include "milkyway/serialize.hpp"

namespace fs = std::filesystem;
using namespace milkyway;

namespace {

std::string fmt(double value, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, value);
  return buf;
}

std::string fmt_opt(const std::optional<double>& value, double scale,
                    int precision = 1) {
  if (!value) return "---";
  return fmt(*value * scale, precision);
}

RunConfig config_from_flag(const std::string& config_file) {
  return config_file.empty() ? default_run_config()
                             : load_run_config(config_file);
}

int cmd_run(const std::string& run_dir, const std::string& cohort_file,
            std::vector<std::string> condition_keys, const std::string& config_file,
            const std::string& corpus_dir, std::int64_t seed, bool has_seed,
            const std::string& gateway_url, const std::string& gateway_model) {
  RunConfig config = config_from_flag(config_file);
  if (has_seed) config.seed = seed;

  Cohort cohort = load_cohort(cohort_file);
  if (condition_keys.empty()) condition_keys = {"nh", "gh", "fh"};
  std::vector<Condition> conditions;
  for (const auto& key : condition_keys) conditions.push_back(condition_from_key(key));

  fs::path corpus = corpus_dir;
  if (corpus.empty()) {
    const fs::path sibling = fs::path(cohort_file).parent_path() / "corpus";
    if (fs::is_directory(sibling)) corpus = sibling;
  }

  if (!gateway_url.empty()) {
    GatewayConfig gw;
    gw.base_url = gateway_url;
    gw.model = gateway_model;
    auto agent = make_gateway_base_agent(gw, config.prior, config.length_fn);
    auto editor = make_gateway_editor(
        gw,
        "You are the harness editor. Do not answer the prediction question. "
        "Read the ordered checkpoint note history for the same unresolved "
        "question, diagnose temporal contrasts, and propose a bounded "
        "harness update. Prefer a null update over a weak one; write only "
        "reusable procedural guidance.");
    ScriptedPorts scripted;  // memory writer + checker stay scripted
    scripted.memory_writer = std::make_unique<ScriptedMemoryWriter>(
        [](const std::string& prev, const NoteHistory&) { return prev; });
    scripted.checker = std::make_unique<NullChecker>();
    Ports ports;
    ports.agent = agent.get();
    ports.editor = editor.get();
    ports.memory_writer = scripted.memory_writer.get();
    ports.checker = scripted.checker.get();

    std::unique_ptr<EvidenceSource> evidence;
    if (!corpus.empty()) {
      evidence = std::make_unique<DirectoryEvidenceSource>(corpus);
    } else {
      evidence = std::make_unique<EmptyEvidenceSource>();
    }
    run_cohort(cohort, conditions, run_dir, config, ports, *evidence);
  } else {
    run_scripted_cohort(cohort, conditions, run_dir, config, corpus);
  }
  std::cout << "run complete: " << run_dir << "\n";
  return 0;
}

int cmd_score(const std::string& run_dir, const std::string& condition,
              double scale) {
  if (!fs::is_directory(run_dir)) {
    throw ConfigError("run directory not found: " + run_dir);
  }
  std::vector<std::string> conditions;
  if (!condition.empty()) {
    conditions.push_back(condition);
  } else {
    for (const char* key : {"nh", "gh", "fh"}) {
      if (fs::is_directory(fs::path(run_dir) / key)) conditions.emplace_back(key);
    }
  }
  std::cout << "condition\tcheckpoint\tS_overall\tS_bin\tS_smc\tS_dmc\tS_num\t"
               "scored\texcluded\n";
  for (const auto& cond : conditions) {
    auto records = score_run(run_dir, cond);
    std::map<std::string, std::vector<ScoreRecord>> by_label;
    for (auto& r : records) by_label[r.checkpoint_label].push_back(r);
    for (const auto& [label, cell] : by_label) {
      const FutureWorldAggregate agg = aggregate_futureworld(cell);
      std::cout << cond << "\t" << label << "\t" << fmt_opt(agg.overall, scale)
                << "\t" << fmt_opt(agg.bin.mean, scale) << "\t"
                << fmt_opt(agg.smc.mean, scale) << "\t"
                << fmt_opt(agg.dmc.mean, scale) << "\t"
                << fmt_opt(agg.num.mean, scale) << "\t" << agg.scored_total
                << "\t" << agg.excluded_total << "\n";
    }
  }
  return 0;
}

int cmd_ladder(const std::string& run_dir, bool unmatched, double scale) {
  const auto cells = ladder_from_run(run_dir, !unmatched);
  std::cout << "cell\tcondition\tcheckpoint\tscore\tn\n";
  for (const auto& cell : cells) {
    for (const auto& cp : cell.checkpoints) {
      std::cout << cell.cell << "\t" << cell.condition << "\t" << cp.label << "\t"
                << fmt(cp.score * scale, 2) << "\t" << cell.n << "\n";
    }
  }
  for (const auto& cell : cells) {
    if (cell.checkpoints.size() < 2) continue;
    const double delta =
        cell.checkpoints.back().score - cell.checkpoints.front().score;
    std::cout << "# delta " << cell.condition << " ("
              << cell.checkpoints.front().label << " -> "
              << cell.checkpoints.back().label << "): " << fmt(delta * scale, 2)
              << "\n";
  }
  return 0;
}

int cmd_readout(const std::string& run_dir, bool unmatched, double scale) {
  const auto rows = readout_from_run(run_dir, !unmatched);
  std::cout << "cell\tn\tdelta_nh\tdelta_gh\tdelta_fh\tfh_minus_nh\tfh_minus_gh\n";
  for (const auto& row : rows) {
    std::cout << row.cell << "\t" << row.n << "\t" << fmt_opt(row.delta_nh, scale)
              << "\t" << fmt_opt(row.delta_gh, scale) << "\t"
              << fmt_opt(row.delta_fh, scale) << "\t"
              << fmt_opt(row.fh_minus_nh, scale) << "\t"
              << fmt_opt(row.fh_minus_gh, scale) << "\n";
  }
  return 0;
}

int cmd_audit(const std::string& run_dir, const std::string& panel,
              const std::string& cohort_label, const std::string& config_file) {
  if (!fs::is_directory(run_dir)) {
    throw ConfigError("run directory not found: " + run_dir);
  }
  RunConfig config = config_from_flag(config_file);
  std::string label = cohort_label;
  if (label.empty()) {
    const fs::path cohort_file = fs::path(run_dir) / "cohort.json";
    label = fs::exists(cohort_file) ? load_cohort(cohort_file).cohort_id : "run";
  }
  if (panel == "a" || panel == "both") {
    std::vector<std::string> gaps;
    const auto rows = audit_patch_stream(run_dir, label, &gaps);
    std::cout << "panel_a\tcohort\tckpt\tnonempty\ttotal\tadds\tF\tE\tU\trevise\n";
    for (const auto& r : rows) {
      std::cout << "panel_a\t" << r.cohort << "\t" << r.checkpoint << "\t"
                << r.nonempty_questions << "\t" << r.total_questions << "\t"
                << r.add_entries << "\t" << r.f_adds << "\t" << r.e_adds << "\t"
                << r.u_adds << "\t" << r.revise_ops << "\n";
    }
    for (const auto& gap : gaps) std::cout << "# gap: " << gap << "\n";
  }
  if (panel == "b" || panel == "both") {
    const PanelBRow row =
        audit_generic_blobs(run_dir, label, config.forbidden_vocabulary);
    std::cout << "panel_b\tcohort\tdeepest_ckpt\tnonempty\ttotal\tmean_bytes\t"
                 "violations\n";
    std::cout << "panel_b\t" << row.cohort << "\t" << row.deepest_checkpoint << "\t"
              << row.nonempty_files << "\t" << row.total_files << "\t"
              << fmt(row.mean_blob_bytes, 1) << "\t" << row.typed_schema_violations
              << "\n";
  }
  return 0;
}

int cmd_futurex(double l1, double l2, double l3, double l4) {
  std::cout << fmt(futurex_overall(l1, l2, l3, l4), 2) << "\n";
  return 0;
}

int cmd_check(const std::string& run_dir, const std::string& config_file) {
  RunConfig config = config_from_flag(config_file);
  const Cohort cohort = load_cohort(fs::path(run_dir) / "cohort.json");
  NullChecker checker;

  Ledger ledger(run_dir, "post_resolution");
  int checked = 0, skipped = 0;
  for (const auto& q : cohort.questions) {
    if (!q.outcome || !q.outcome->valid) {
      ++skipped;
      continue;
    }
    // Deepest FH snapshot is the final pre-resolution harness.
    HarnessState final_state;
    NoteHistory history;
    history.question_id = q.question_id;
    bool found = false;
    for (int t = static_cast<int>(q.checkpoints.size()); t >= 1; --t) {
      const fs::path snapshot = fs::path(run_dir) / "fh" / q.question_id /
                                ("ckpt_" + std::to_string(t)) / "harness_after.json";
      if (fs::exists(snapshot)) {
        std::ifstream in(snapshot);
        final_state = harness_state_from_json(Json::parse(in));
        found = true;
        break;
      }
    }
    if (!found) {
      ++skipped;
      continue;
    }
    for (int t = 1; t <= static_cast<int>(q.checkpoints.size()); ++t) {
      const fs::path note_file = fs::path(run_dir) / "fh" / q.question_id /
                                 ("ckpt_" + std::to_string(t)) / "note.json";
      if (!fs::exists(note_file)) continue;
      std::ifstream in(note_file);
      history = append_note(history, note_from_json(Json::parse(in)));
    }
    const PostResolutionResult result = run_post_resolution_check(
        final_state, history, *q.outcome, checker, config);
    Json status;
    status["question_id"] = q.question_id;
    status["checked"] = result.checked_ok;
    if (!result.failure.empty()) status["failure"] = result.failure;
    status["applied_ops"] = result.report.applied_total();
    const std::string base = "post_resolution/fh/" + q.question_id + "/";
    ledger.write_run_artifact(base + "checked_harness.json",
                              canonical_dump(to_json(result.checked)));
    ledger.write_run_artifact(base + "checker_raw.txt", result.raw_checker_output);
    ledger.write_run_artifact(base + "apply_report.json",
                              canonical_dump(to_json(result.report)));
    ledger.write_run_artifact(base + "status.json", canonical_dump(status));
    ++checked;
  }
  if (checked > 0) ledger.close();
  std::cout << "post-resolution check: " << checked << " checked, " << skipped
            << " skipped\n";
  return 0;
}

int cmd_verify(const std::string& run_dir) {
  std::vector<std::string> problems;
  const bool ok = verify_run_integrity(run_dir, &problems);
  for (const auto& p : problems) std::cout << "problem: " << p << "\n";
  std::cout << (ok ? "ledger integrity: ok" : "ledger integrity: FAILED") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pre-resolution adaptation runtime for future-prediction questions"};
  app.require_subcommand(1);

  // run
  std::string run_dir, cohort_file, config_file, corpus_dir;
  std::vector<std::string> conditions;
  std::int64_t seed = 0;
  std::string gateway_url, gateway_model = "default";
  auto* run = app.add_subcommand("run", "Execute a cohort under one or more conditions");
  run->add_option("--run-dir", run_dir)->required();
  run->add_option("--cohort", cohort_file)->required();
  run->add_option("--condition", conditions, "nh, gh, fh (repeatable; default all)");
  run->add_option("--config", config_file);
  run->add_option("--corpus", corpus_dir, "evidence corpus directory");
  auto* seed_opt = run->add_option("--seed", seed, "recorded in run artifacts");
  run->add_option("--gateway-url", gateway_url, "chat-completion endpoint");
  run->add_option("--gateway-model", gateway_model);

  // score
  std::string score_run_dir, score_condition;
  double scale = 100.0;
  auto* score = app.add_subcommand("score", "Per-cell aggregates from a run ledger");
  score->add_option("--run-dir", score_run_dir)->required();
  score->add_option("--condition", score_condition);
  score->add_option("--scale", scale, "reporting scale (default 100)");

  // ladder
  std::string ladder_run_dir;
  bool unmatched = false;
  auto* ladder = app.add_subcommand("ladder", "Per-condition checkpoint trajectories");
  ladder->add_option("--run-dir", ladder_run_dir)->required();
  ladder->add_flag("--allow-unmatched", unmatched,
                   "score cells independently instead of on the matched set");
  ladder->add_option("--scale", scale);

  // readout
  std::string readout_run_dir;
  auto* readout = app.add_subcommand("readout", "Mechanism readout table");
  readout->add_option("--run-dir", readout_run_dir)->required();
  readout->add_flag("--allow-unmatched", unmatched);
  readout->add_option("--scale", scale);

  // audit
  std::string audit_run_dir, panel = "both", cohort_label;
  auto* audit = app.add_subcommand("audit", "Patch-stream and generic-blob audits");
  audit->add_option("--run-dir", audit_run_dir)->required();
  audit->add_option("--panel", panel)->check(CLI::IsMember({"a", "b", "both"}));
  audit->add_option("--cohort", cohort_label);
  audit->add_option("--config", config_file);

  // futurex
  std::vector<double> levels;
  auto* futurex = app.add_subcommand("futurex", "Weighted overall from level scores");
  futurex->add_option("levels", levels, "L1 L2 L3 L4")->expected(4);

  // check
  std::string check_run_dir;
  auto* check = app.add_subcommand("check", "Post-resolution checking pass");
  check->add_option("--run-dir", check_run_dir)->required();
  check->add_option("--config", config_file);

  // make-demo
  std::string demo_dir;
  int demo_questions = 24;
  auto* demo = app.add_subcommand("make-demo",
                                  "Write the bundled synthetic cohort and corpus");
  demo->add_option("--out", demo_dir)->required();
  demo->add_option("--questions", demo_questions);

  // verify
  std::string verify_run_dir;
  auto* verify = app.add_subcommand("verify", "Check ledger integrity against the close manifest");
  verify->add_option("--run-dir", verify_run_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(run_dir, cohort_file, conditions, config_file, corpus_dir,
                     seed, seed_opt->count() > 0, gateway_url, gateway_model);
    }
    if (score->parsed()) return cmd_score(score_run_dir, score_condition, scale);
    if (ladder->parsed()) return cmd_ladder(ladder_run_dir, unmatched, scale);
    if (readout->parsed()) return cmd_readout(readout_run_dir, unmatched, scale);
    if (audit->parsed()) return cmd_audit(audit_run_dir, panel, cohort_label, config_file);
    if (futurex->parsed()) return cmd_futurex(levels[0], levels[1], levels[2], levels[3]);
    if (check->parsed()) return cmd_check(check_run_dir, config_file);
    if (demo->parsed()) {
      write_demo_cohort(demo_dir, demo_questions);
      std::cout << "demo cohort written to " << demo_dir << "\n";
      return 0;
    }
    if (verify->parsed()) return cmd_verify(verify_run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
