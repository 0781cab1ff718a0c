#include "milkyway/harness.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace milkyway {

Axis axis_from_key(std::string_view key) {
  if (key == "F") return Axis::F;
  if (key == "E") return Axis::E;
  if (key == "U") return Axis::U;
  throw std::invalid_argument("unknown axis: " + std::string(key));
}

const char* drop_reason_key(DropReason r) {
  switch (r) {
    case DropReason::InvalidReference: return "invalid_reference";
    case DropReason::Duplicate: return "duplicate";
    case DropReason::AxisCap: return "axis_cap";
    case DropReason::AddLimit: return "add_limit";
    default: return "content_rejected";
  }
}

int HarnessState::active_count(Axis axis) const {
  int n = 0;
  for (const auto& e : entries) {
    if (e.axis == axis && e.status == EntryStatus::Active) ++n;
  }
  return n;
}

const HarnessEntry* HarnessState::find(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = true;  // leading whitespace is dropped
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

ContentValidator default_content_rule(ContentRuleConfig cfg) {
  return [cfg = std::move(cfg)](const PatchAdd& add) -> std::optional<std::string> {
    if (normalize_text(add.guidance).empty()) return "empty";
    if (normalize_text(add.when).empty()) return "empty";
    if (add.guidance.size() > cfg.max_guidance_chars) return "too_long";
    const std::string norm = normalize_text(add.guidance);
    for (const auto& pattern : cfg.forbidden_patterns) {
      if (norm.find(normalize_text(pattern)) != std::string::npos) {
        return "forbidden_pattern";
      }
    }
    return std::nullopt;
  };
}

namespace {

// Shared walk behind validate_patch and apply_patch. Works on a scratch
// copy of the entries so the patch's own deprecates are credited before
// revise references and add caps are checked.
struct Outcome {
  HarnessPatch validated;
  std::vector<DroppedOp> drops;
  std::vector<HarnessEntry> entries;
  int applied = 0;
};

int next_serial(const std::vector<HarnessEntry>& entries, Axis axis) {
  int max_serial = 0;
  const std::string prefix = axis_key(axis);
  for (const auto& e : entries) {
    if (e.axis != axis) continue;
    int serial = std::atoi(e.id.c_str() + prefix.size());
    max_serial = std::max(max_serial, serial);
  }
  return max_serial + 1;
}

HarnessEntry* find_mut(std::vector<HarnessEntry>& entries, const std::string& id) {
  for (auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

Outcome walk(const HarnessState& state, const HarnessPatch& patch,
             const ContentValidator& content_rule, int checkpoint) {
  Outcome out;
  out.entries = state.entries;

  for (std::size_t i = 0; i < patch.deprecates.size(); ++i) {
    const auto& op = patch.deprecates[i];
    HarnessEntry* target = find_mut(out.entries, op.target_id);
    if (target == nullptr || target->status != EntryStatus::Active) {
      out.drops.push_back({"deprecate", static_cast<int>(i),
                           DropReason::InvalidReference, op.target_id});
      continue;
    }
    target->status = EntryStatus::Deprecated;
    target->deprecation_reason = op.reason;
    out.validated.deprecates.push_back(op);
    ++out.applied;
  }

  for (std::size_t i = 0; i < patch.revises.size(); ++i) {
    const auto& op = patch.revises[i];
    HarnessEntry* target = find_mut(out.entries, op.target_id);
    if (target == nullptr || target->status != EntryStatus::Active) {
      out.drops.push_back({"revise", static_cast<int>(i),
                           DropReason::InvalidReference, op.target_id});
      continue;
    }
    if (normalize_text(op.when).empty() || normalize_text(op.guidance).empty()) {
      out.drops.push_back({"revise", static_cast<int>(i),
                           DropReason::ContentRejected, "empty"});
      continue;
    }
    target->when = op.when;
    target->guidance = op.guidance;
    target->revised_at_checkpoint = checkpoint;
    out.validated.revises.push_back(op);
    ++out.applied;
  }

  for (std::size_t i = 0; i < patch.adds.size(); ++i) {
    const auto& op = patch.adds[i];
    if (i >= static_cast<std::size_t>(kMaxAddsPerPatch)) {
      out.drops.push_back({"add", static_cast<int>(i), DropReason::AddLimit,
                           axis_key(op.axis)});
      continue;
    }
    const std::string norm_when = normalize_text(op.when);
    const std::string norm_guidance = normalize_text(op.guidance);
    bool duplicate = false;
    for (const auto& e : out.entries) {
      if (e.status == EntryStatus::Active && e.axis == op.axis &&
          normalize_text(e.when) == norm_when &&
          normalize_text(e.guidance) == norm_guidance) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) {
      out.drops.push_back({"add", static_cast<int>(i), DropReason::Duplicate,
                           axis_key(op.axis)});
      continue;
    }
    if (auto rejection = content_rule(op)) {
      out.drops.push_back({"add", static_cast<int>(i),
                           DropReason::ContentRejected, *rejection});
      continue;
    }
    int active_in_axis = 0;
    for (const auto& e : out.entries) {
      if (e.axis == op.axis && e.status == EntryStatus::Active) ++active_in_axis;
    }
    if (active_in_axis >= kMaxActivePerAxis) {
      out.drops.push_back({"add", static_cast<int>(i), DropReason::AxisCap,
                           axis_key(op.axis)});
      continue;
    }
    HarnessEntry entry;
    entry.id = std::string(axis_key(op.axis)) +
               std::to_string(next_serial(out.entries, op.axis));
    entry.axis = op.axis;
    entry.when = op.when;
    entry.guidance = op.guidance;
    entry.status = EntryStatus::Active;
    entry.created_at_checkpoint = checkpoint;
    out.entries.push_back(std::move(entry));
    out.validated.adds.push_back(op);
    ++out.applied;
  }

  return out;
}

}  // namespace

std::pair<HarnessPatch, std::vector<DroppedOp>> validate_patch(
    const HarnessState& state, const HarnessPatch& patch,
    const ContentValidator& content_rule) {
  Outcome out = walk(state, patch, content_rule, /*checkpoint=*/0);
  return {std::move(out.validated), std::move(out.drops)};
}

std::pair<HarnessState, ApplyReport> apply_patch(
    const HarnessState& state, const HarnessPatch& patch,
    const ContentValidator& content_rule, int checkpoint) {
  Outcome out = walk(state, patch, content_rule, checkpoint);

  HarnessState next = state;
  ApplyReport report;
  report.applied_adds = static_cast<int>(out.validated.adds.size());
  report.applied_revises = static_cast<int>(out.validated.revises.size());
  report.applied_deprecates = static_cast<int>(out.validated.deprecates.size());
  report.dropped_ops = std::move(out.drops);

  if (out.applied > 0) {
    next.entries = std::move(out.entries);
    next.version = state.version + 1;
  }
  report.resulting_version = next.version;
  return {std::move(next), std::move(report)};
}

const std::string kEmptyGuidanceBlock =
    "FUTURE PREDICTION HARNESS\n(no active entries)\n";

std::string render_harness(const HarnessState& state) {
  bool any_active = false;
  for (const auto& e : state.entries) {
    if (e.status == EntryStatus::Active) {
      any_active = true;
      break;
    }
  }
  if (!any_active) return kEmptyGuidanceBlock;

  std::ostringstream os;
  os << "FUTURE PREDICTION HARNESS\n";
  for (Axis axis : {Axis::F, Axis::E, Axis::U}) {
    bool has_section = false;
    for (const auto& e : state.entries) {
      if (e.axis != axis || e.status != EntryStatus::Active) continue;
      if (!has_section) {
        os << "[" << axis_key(axis) << "] " << axis_label(axis) << "\n";
        has_section = true;
      }
      os << "- " << e.id << " | when: " << e.when
         << " | guidance: " << e.guidance << "\n";
    }
  }
  return os.str();
}

}  // namespace milkyway
