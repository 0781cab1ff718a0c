#include "milkyway/ledger.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace milkyway {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestDir = "manifests";

void write_file_atomic(const fs::path& target, const std::string& content) {
  fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw LedgerError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
  fs::rename(tmp, target);
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw LedgerError("cannot read " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

std::string content_digest(const std::string& bytes) {
  // FNV-1a 64-bit; stable across platforms and builds.
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string file_digest(const fs::path& file) { return content_digest(read_file(file)); }

Ledger::Ledger(fs::path run_dir, std::string stage)
    : run_dir_(std::move(run_dir)), stage_(std::move(stage)) {
  fs::create_directories(run_dir_);
  closed_ = fs::exists(run_dir_ / kManifestDir / (stage_ + "_close.json"));
}

fs::path Ledger::checkpoint_dir(const std::string& condition,
                                const std::string& question_id, int checkpoint) const {
  return run_dir_ / condition / question_id / ("ckpt_" + std::to_string(checkpoint));
}

fs::path Ledger::write_artifact(const std::string& condition,
                                const std::string& question_id, int checkpoint,
                                const std::string& name, const std::string& content) {
  if (closed_) throw AppendOnlyViolation("run is closed: " + run_dir_.string());
  const fs::path target = checkpoint_dir(condition, question_id, checkpoint) / name;
  if (fs::exists(target)) {
    throw AppendOnlyViolation("artifact already exists: " + target.string());
  }
  write_file_atomic(target, content);
  return target;
}

fs::path Ledger::write_run_artifact(const std::string& name,
                                    const std::string& content) {
  if (closed_) throw AppendOnlyViolation("run is closed: " + run_dir_.string());
  const fs::path target = run_dir_ / name;
  if (fs::exists(target)) {
    throw AppendOnlyViolation("artifact already exists: " + target.string());
  }
  write_file_atomic(target, content);
  return target;
}

void Ledger::write_harness_snapshot(const std::string& condition,
                                    const std::string& question_id, int checkpoint,
                                    const HarnessState& state) {
  const std::string serialized = canonical_dump(to_json(state));
  write_artifact(condition, question_id, checkpoint, "harness_after.json", serialized);
  if (closed_) throw AppendOnlyViolation("run is closed: " + run_dir_.string());
  const fs::path legacy = run_dir_ / condition / "harness" / question_id /
                          "legacy_versions" / ("ck" + std::to_string(checkpoint)) /
                          "harness.json";
  if (fs::exists(legacy)) {
    throw AppendOnlyViolation("artifact already exists: " + legacy.string());
  }
  write_file_atomic(legacy, serialized);
}

void Ledger::write_stats(const std::string& condition, const std::string& question_id,
                         int checkpoint, const CheckpointStats& stats) {
  Json j;
  j["tool_calls"] = stats.tool_calls;
  j["prompt_tokens"] = stats.prompt_tokens;
  j["llm_calls"] = stats.llm_calls;
  write_artifact(condition, question_id, checkpoint, "main_agent_stats.json",
                 canonical_dump(j));
}

void Ledger::close() {
  if (closed_) throw AppendOnlyViolation("stage already closed: " + stage_);
  // Earlier stages' manifests define what this stage did not add.
  std::map<std::string, bool> covered;
  const fs::path manifest_dir = run_dir_ / kManifestDir;
  if (fs::is_directory(manifest_dir)) {
    for (const auto& entry : fs::directory_iterator(manifest_dir)) {
      if (!entry.is_regular_file()) continue;
      Json prior = Json::parse(read_file(entry.path()));
      for (const auto& [rel, digest] : prior.at("artifacts").items()) {
        covered[rel] = true;
      }
    }
  }
  Json manifest;
  manifest["stage"] = stage_;
  manifest["artifacts"] = Json::object();
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir_)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), run_dir_);
    if (rel.begin()->string() == kManifestDir) continue;
    if (covered.count(rel.generic_string()) > 0) continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  for (const auto& rel : files) {
    manifest["artifacts"][rel.generic_string()] = file_digest(run_dir_ / rel);
  }
  write_file_atomic(run_dir_ / kManifestDir / (stage_ + "_close.json"),
                    canonical_dump(manifest));
  closed_ = true;
}

bool verify_run_integrity(const fs::path& run_dir, std::vector<std::string>* problems) {
  auto report = [problems](const std::string& msg) {
    if (problems != nullptr) problems->push_back(msg);
  };
  const fs::path manifest_dir = run_dir / kManifestDir;
  if (!fs::is_directory(manifest_dir)) {
    report("no close manifest found");
    return false;
  }
  std::map<std::string, std::string> expected;  // rel path -> digest
  bool ok = true;
  for (const auto& entry : fs::directory_iterator(manifest_dir)) {
    if (!entry.is_regular_file()) continue;
    Json manifest = Json::parse(read_file(entry.path()));
    for (const auto& [rel, digest] : manifest.at("artifacts").items()) {
      auto [it, inserted] = expected.emplace(rel, digest.get<std::string>());
      if (!inserted) {
        ok = false;
        report("artifact listed in multiple manifests: " + rel);
      }
    }
  }
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), run_dir);
    if (rel.begin()->string() == kManifestDir) continue;
    auto it = expected.find(rel.generic_string());
    if (it == expected.end()) {
      ok = false;
      report("artifact not covered by any close manifest: " + rel.generic_string());
      continue;
    }
    const std::string digest = file_digest(entry.path());
    if (digest != it->second) {
      ok = false;
      report("artifact digest mismatch: " + rel.generic_string());
    }
    expected.erase(it);
  }
  for (const auto& [rel, digest] : expected) {
    ok = false;
    report("manifested artifact missing: " + rel);
  }
  return ok;
}

namespace {

int checkpoint_of(const fs::path& dir_name) {
  const std::string name = dir_name.filename().string();
  if (name.rfind("ckpt_", 0) != 0) return -1;
  return std::atoi(name.c_str() + 5);
}

bool has_active_entry(const Json& harness) {
  for (const auto& e : harness.at("entries")) {
    if (e.at("status").get<std::string>() == "active") return true;
  }
  return false;
}

}  // namespace

std::vector<PanelARow> audit_patch_stream(const fs::path& run_dir,
                                          const std::string& cohort,
                                          std::vector<std::string>* gaps) {
  const fs::path fh_dir = run_dir / "fh";
  std::map<int, PanelARow> rows;
  if (!fs::is_directory(fh_dir)) return {};

  for (const auto& qentry : fs::directory_iterator(fh_dir)) {
    if (!qentry.is_directory() || qentry.path().filename() == "harness") continue;
    const std::string qid = qentry.path().filename().string();
    for (const auto& centry : fs::directory_iterator(qentry.path())) {
      const int t = checkpoint_of(centry.path());
      if (t < 2) continue;  // the patch stream starts at the second run
      PanelARow& row = rows[t];
      row.cohort = cohort;
      row.checkpoint = t;
      ++row.total_questions;

      const fs::path harness_file = centry.path() / "harness_after.json";
      const fs::path patch_file = centry.path() / "patch.json";
      if (!fs::exists(harness_file)) {
        if (gaps != nullptr) {
          gaps->push_back(qid + " ckpt " + std::to_string(t) + ": missing snapshot");
        }
        continue;
      }
      if (has_active_entry(Json::parse(read_file(harness_file)))) {
        ++row.nonempty_questions;
      }
      if (!fs::exists(patch_file)) continue;  // no update ran at this checkpoint
      Json patch = Json::parse(read_file(patch_file));
      for (const auto& add : patch.at("add")) {
        ++row.add_entries;
        const std::string axis = add.at("axis").get<std::string>();
        if (axis == "F") ++row.f_adds;
        if (axis == "E") ++row.e_adds;
        if (axis == "U") ++row.u_adds;
      }
      row.revise_ops += static_cast<int>(patch.at("revise").size());
    }
  }
  std::vector<PanelARow> out;
  out.reserve(rows.size());
  for (auto& [t, row] : rows) out.push_back(std::move(row));
  return out;
}

PanelBRow audit_generic_blobs(const fs::path& run_dir, const std::string& cohort,
                              const std::vector<std::string>& forbidden_vocabulary) {
  PanelBRow row;
  row.cohort = cohort;
  const fs::path gh_dir = run_dir / "gh";
  if (!fs::is_directory(gh_dir)) return row;

  std::vector<std::string> lowered_vocab;
  lowered_vocab.reserve(forbidden_vocabulary.size());
  for (const auto& token : forbidden_vocabulary) {
    std::string t = token;
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    lowered_vocab.push_back(std::move(t));
  }

  std::int64_t byte_sum = 0;
  for (const auto& qentry : fs::directory_iterator(gh_dir)) {
    if (!qentry.is_directory()) continue;
    int deepest = -1;
    fs::path deepest_blob;
    for (const auto& centry : fs::directory_iterator(qentry.path())) {
      const int t = checkpoint_of(centry.path());
      if (t < 0) continue;
      const fs::path blob = centry.path() / "memory_blob.txt";
      if (fs::exists(blob) && t > deepest) {
        deepest = t;
        deepest_blob = blob;
      }
    }
    if (deepest < 0) continue;
    row.deepest_checkpoint = std::max(row.deepest_checkpoint, deepest);
    ++row.total_files;
    std::string text = read_file(deepest_blob);
    if (!text.empty()) {
      ++row.nonempty_files;
      byte_sum += static_cast<std::int64_t>(text.size());
    }
    std::string lowered = text;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    for (const auto& token : lowered_vocab) {
      if (token.empty()) continue;
      std::size_t pos = 0;
      while ((pos = lowered.find(token, pos)) != std::string::npos) {
        ++row.typed_schema_violations;
        pos += token.size();
      }
    }
  }
  if (row.nonempty_files > 0) {
    row.mean_blob_bytes =
        static_cast<double>(byte_sum) / static_cast<double>(row.nonempty_files);
  }
  return row;
}

}  // namespace milkyway
