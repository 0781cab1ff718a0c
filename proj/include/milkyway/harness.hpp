#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace milkyway {

// Writable axes of the future prediction harness: factor tracking,
// evidence handling, uncertainty management.
enum class Axis { F, E, U };

constexpr const char* axis_key(Axis a) {
  switch (a) {
    case Axis::F: return "F";
    case Axis::E: return "E";
    default: return "U";
  }
}
constexpr const char* axis_label(Axis a) {
  switch (a) {
    case Axis::F: return "factor tracking";
    case Axis::E: return "evidence handling";
    default: return "uncertainty management";
  }
}
Axis axis_from_key(std::string_view key);  // throws std::invalid_argument

enum class EntryStatus { Active, Deprecated };

// One (axis, when, guidance) record. The axis is fixed at creation;
// revise may only rewrite the when/guidance text.
struct HarnessEntry {
  std::string id;  // "{axis}{serial}", question-scoped, never reused
  Axis axis = Axis::F;
  std::string when;
  std::string guidance;
  EntryStatus status = EntryStatus::Active;
  int created_at_checkpoint = 0;
  std::optional<int> revised_at_checkpoint;
  std::optional<std::string> deprecation_reason;

  bool operator==(const HarnessEntry&) const = default;
};

// The question-local persistent state. Entries keep insertion order and are
// never removed: deprecation flips the status, the id stays allocated.
struct HarnessState {
  std::string question_id;
  std::vector<HarnessEntry> entries;
  int version = 0;  // one increment per applied non-null patch

  int active_count(Axis axis) const;
  const HarnessEntry* find(const std::string& id) const;

  bool operator==(const HarnessState&) const = default;
};

struct PatchAdd {
  Axis axis = Axis::F;
  std::string when;
  std::string guidance;
  bool operator==(const PatchAdd&) const = default;
};

struct PatchRevise {
  std::string target_id;
  std::string when;
  std::string guidance;
  bool operator==(const PatchRevise&) const = default;
};

struct PatchDeprecate {
  std::string target_id;
  std::string reason;
  bool operator==(const PatchDeprecate&) const = default;
};

// Bounded update: at most 2 adds survive validation, references must point
// at active entries, and each axis holds at most 5 active entries.
struct HarnessPatch {
  std::vector<PatchAdd> adds;
  std::vector<PatchRevise> revises;
  std::vector<PatchDeprecate> deprecates;

  bool is_null() const {
    return adds.empty() && revises.empty() && deprecates.empty();
  }
  bool operator==(const HarnessPatch&) const = default;
};

constexpr int kMaxAddsPerPatch = 2;
constexpr int kMaxActivePerAxis = 5;

enum class DropReason {
  InvalidReference,
  Duplicate,
  AxisCap,
  AddLimit,
  ContentRejected,
};
const char* drop_reason_key(DropReason r);

struct DroppedOp {
  std::string op;  // "add" | "revise" | "deprecate"
  int index = 0;   // position within that op list of the input patch
  DropReason reason = DropReason::InvalidReference;
  std::string detail;

  bool operator==(const DroppedOp&) const = default;
};

struct ApplyReport {
  int applied_adds = 0;
  int applied_revises = 0;
  int applied_deprecates = 0;
  std::vector<DroppedOp> dropped_ops;
  int resulting_version = 0;

  int applied_total() const {
    return applied_adds + applied_revises + applied_deprecates;
  }
  bool operator==(const ApplyReport&) const = default;
};

// Content admissibility hook. Returns std::nullopt to accept, or a short
// rejection reason. The default rule is purely structural.
using ContentValidator = std::function<std::optional<std::string>(const PatchAdd&)>;

struct ContentRuleConfig {
  std::size_t max_guidance_chars = 600;
  // Case-insensitive substrings that flag literal final-answer phrasing.
  std::vector<std::string> forbidden_patterns = {"final answer", "the answer is"};
};

ContentValidator default_content_rule(ContentRuleConfig cfg = {});

// Collapses whitespace runs to single spaces, trims, lowercases ASCII.
// Used for duplicate detection and the non-empty invariants.
std::string normalize_text(std::string_view text);

// Dry-runs application and splits the patch into the ops that will apply
// and the ops that degrade to drops. Never fails.
std::pair<HarnessPatch, std::vector<DroppedOp>> validate_patch(
    const HarnessState& state, const HarnessPatch& patch,
    const ContentValidator& content_rule);

// Deterministic application in fixed order deprecate -> revise -> add.
// Re-runs validation internally so the operation is total. `checkpoint`
// stamps created_at/revised_at on touched entries.
std::pair<HarnessState, ApplyReport> apply_patch(
    const HarnessState& state, const HarnessPatch& patch,
    const ContentValidator& content_rule, int checkpoint = 0);

inline std::pair<HarnessState, ApplyReport> apply_patch(
    const HarnessState& state, const HarnessPatch& patch, int checkpoint = 0) {
  return apply_patch(state, patch, default_content_rule(), checkpoint);
}

// Fixed plain-text presentation of the active entries, grouped F, E, U.
// Deprecated entries never appear. An empty harness renders the canonical
// empty block (see kEmptyGuidanceBlock).
std::string render_harness(const HarnessState& state);

extern const std::string kEmptyGuidanceBlock;

}  // namespace milkyway
