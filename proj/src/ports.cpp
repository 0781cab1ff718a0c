#include "milkyway/ports.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "milkyway/serialize.hpp"

namespace milkyway {

void Budgets::validate() const {
  if (max_tool_calls <= 0) throw ConfigError("max_tool_calls must be positive");
  if (max_context_tokens <= 0) throw ConfigError("max_context_tokens must be positive");
  if (gh_byte_budget && *gh_byte_budget <= 0) {
    throw ConfigError("gh_byte_budget must be positive when set");
  }
  if (gh_write_calls && *gh_write_calls <= 0) {
    throw ConfigError("gh_write_calls must be positive when set");
  }
}

std::vector<EvidenceItem> ForwardOnlyAuditor::query(const std::string& query_text,
                                                    Timestamp as_of) {
  std::vector<EvidenceItem> items = inner_->query(query_text, as_of);
  std::vector<EvidenceItem> clean;
  clean.reserve(items.size());
  for (auto& item : items) {
    if (item.timestamp > as_of) {
      violations_.push_back({item.id, item.timestamp, as_of, query_text});
    } else {
      clean.push_back(std::move(item));
    }
  }
  return clean;
}

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

DirectoryEvidenceSource::DirectoryEvidenceSource(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("evidence corpus directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    EvidenceItem item;
    bool have_id = false, have_time = false;
    while (std::getline(in, line)) {
      if (line.empty()) break;
      if (line.rfind("id:", 0) == 0) {
        item.id = line.substr(3);
        item.id.erase(0, item.id.find_first_not_of(' '));
        have_id = true;
      } else if (line.rfind("timestamp:", 0) == 0) {
        std::string value = line.substr(10);
        value.erase(0, value.find_first_not_of(' '));
        item.timestamp = parse_timestamp(value);
        have_time = true;
      }
    }
    if (!have_id || !have_time) {
      throw ConfigError("corpus document missing id/timestamp header: " +
                        file.string());
    }
    std::ostringstream body;
    body << in.rdbuf();
    item.text = body.str();
    items_.push_back(std::move(item));
  }
}

std::vector<EvidenceItem> DirectoryEvidenceSource::query(const std::string& query_text,
                                                         Timestamp as_of) {
  const std::string needle = lowercase(query_text);
  std::vector<EvidenceItem> hits;
  for (const auto& item : items_) {
    if (item.timestamp > as_of) continue;
    if (needle.empty() || lowercase(item.text).find(needle) != std::string::npos ||
        lowercase(item.id).find(needle) != std::string::npos) {
      hits.push_back(item);
    }
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const EvidenceItem& a, const EvidenceItem& b) {
                     if (a.timestamp != b.timestamp) return a.timestamp > b.timestamp;
                     return a.id < b.id;
                   });
  return hits;
}

std::string assemble_base_prompt(const std::string& prior, const Question& question,
                                 const std::string& guidance) {
  std::ostringstream os;
  os << prior << "\n\n";
  os << "QUESTION " << question.question_id << "\n";
  os << question.statement << "\n";
  os << "Answer type: " << answer_type_key(question.answer_type) << "\n";
  if (!question.options.empty()) {
    os << "Options:\n";
    for (std::size_t i = 0; i < question.options.size(); ++i) {
      os << "  [" << i << "] " << question.options[i] << "\n";
    }
  }
  os << "Resolution rule: " << question.resolution_rule << "\n\n";
  os << (guidance.empty() ? kEmptyGuidanceBlock : guidance);
  return os.str();
}

std::pair<RunTrace, FinalizedPayload> ScriptedBaseAgent::run(
    const Question& question, Timestamp checkpoint_time, const std::string& guidance,
    EvidenceSource& evidence, const Budgets& budgets) {
  int checkpoint_index = 0;
  for (std::size_t i = 0; i < question.checkpoints.size(); ++i) {
    if (question.checkpoints[i] == checkpoint_time) {
      checkpoint_index = static_cast<int>(i) + 1;
      break;
    }
  }
  auto it = rows_.find({question.question_id, checkpoint_index});
  if (it == rows_.end()) {
    throw ConfigError("no script row for question " + question.question_id +
                      " checkpoint " + std::to_string(checkpoint_index));
  }
  const ScriptRow& row = it->second;

  RunTrace trace;
  trace.llm_calls = 1;
  if (!row.evidence_query.empty() && tool_budget_allows(trace.tool_calls, budgets)) {
    auto items = evidence.query(row.evidence_query, checkpoint_time);
    ++trace.tool_calls;
    std::ostringstream detail;
    detail << row.evidence_query << " -> " << items.size() << " items";
    for (const auto& item : items) detail << " " << item.id;
    trace.events.push_back({"tool_call", detail.str()});
  }

  const FinalizedPayload* payload = &row.default_payload;
  for (const auto& branch : row.branches) {
    if (!branch.guidance_contains.empty() &&
        guidance.find(branch.guidance_contains) != std::string::npos) {
      payload = &branch.payload;
      break;
    }
  }
  trace.events.push_back({"finalize", "scripted"});
  return {std::move(trace), *payload};
}

std::string ScriptedEditor::propose(const HarnessState& state,
                                    const NoteHistory& history) {
  auto [signal, patch] = rule_(state, history);
  return editor_document(signal, patch);
}

EditorRule divergence_threshold_rule(double threshold, std::vector<PatchAdd> writes) {
  return [threshold, writes = std::move(writes)](
             const HarnessState& state,
             const NoteHistory& history) -> std::pair<PreResolutionSignal, HarnessPatch> {
    PreResolutionSignal signal;
    HarnessPatch patch;
    if (history.notes.size() < 2) return {signal, patch};

    const auto& prev = history.notes[history.notes.size() - 2].prediction;
    const auto& curr = history.notes.back().prediction;
    bool diverged = false;
    if (prev.is_numeric() && curr.is_numeric()) {
      diverged = std::abs(curr.numeric() - prev.numeric()) > threshold;
    } else {
      diverged = !(prev == curr);
    }
    if (!diverged) return {signal, patch};

    signal.prediction_divergence.push_back(
        "prediction changed between checkpoints " +
        std::to_string(history.notes.size() - 1) + " and " +
        std::to_string(history.notes.size()));
    for (const auto& write : writes) {
      bool already_active = false;
      for (const auto& e : state.entries) {
        if (e.status == EntryStatus::Active && e.axis == write.axis &&
            normalize_text(e.guidance) == normalize_text(write.guidance)) {
          already_active = true;
          break;
        }
      }
      if (!already_active) {
        signal.diagnostic_findings.push_back("reusable lesson written to axis " +
                                             std::string(axis_key(write.axis)));
        patch.adds.push_back(write);
        break;
      }
    }
    return {signal, patch};
  };
}

std::string ScriptedChecker::check(const HarnessState& final_state,
                                   const NoteHistory& history, const Outcome& outcome) {
  HarnessPatch patch = rule_(final_state, history, outcome);
  return editor_document(PreResolutionSignal{}, patch);
}

std::string NullChecker::check(const HarnessState&, const NoteHistory&, const Outcome&) {
  return editor_document(PreResolutionSignal{}, HarnessPatch{});
}

}  // namespace milkyway
