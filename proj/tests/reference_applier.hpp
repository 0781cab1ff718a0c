#pragma once

// Step-by-step reference applier, kept independent of the production walk:
// plain index maps, explicit per-op loops, its own duplicate and cap
// bookkeeping. Tests compare production apply_patch output against this.

#include <map>
#include <string>
#include <vector>

#include "milkyway/harness.hpp"

namespace reference {

struct Entry {
  std::string id;
  milkyway::Axis axis;
  std::string when;
  std::string guidance;
  bool active = true;
  int created_at = 0;
  int revised_at = -1;
  std::string deprecation_reason;
};

struct Result {
  std::vector<Entry> entries;
  int version = 0;
  int applied_adds = 0;
  int applied_revises = 0;
  int applied_deprecates = 0;
  std::vector<std::string> drop_reasons_in_order;  // one per dropped op
};

inline std::string norm(const std::string& s) { return milkyway::normalize_text(s); }

inline Result apply(const milkyway::HarnessState& state,
                    const milkyway::HarnessPatch& patch,
                    const milkyway::ContentValidator& rule, int checkpoint) {
  Result r;
  r.version = state.version;
  for (const auto& e : state.entries) {
    r.entries.push_back({e.id, e.axis, e.when, e.guidance,
                         e.status == milkyway::EntryStatus::Active,
                         e.created_at_checkpoint,
                         e.revised_at_checkpoint.value_or(-1),
                         e.deprecation_reason.value_or("")});
  }
  auto find_active = [&r](const std::string& id) -> Entry* {
    for (auto& e : r.entries) {
      if (e.id == id && e.active) return &e;
    }
    return nullptr;
  };

  // 1) deprecates, in listed order
  for (const auto& op : patch.deprecates) {
    Entry* e = find_active(op.target_id);
    if (e == nullptr) {
      r.drop_reasons_in_order.push_back("invalid_reference");
      continue;
    }
    e->active = false;
    e->deprecation_reason = op.reason;
    ++r.applied_deprecates;
  }
  // 2) revises
  for (const auto& op : patch.revises) {
    Entry* e = find_active(op.target_id);
    if (e == nullptr) {
      r.drop_reasons_in_order.push_back("invalid_reference");
      continue;
    }
    if (norm(op.when).empty() || norm(op.guidance).empty()) {
      r.drop_reasons_in_order.push_back("content_rejected");
      continue;
    }
    e->when = op.when;
    e->guidance = op.guidance;
    e->revised_at = checkpoint;
    ++r.applied_revises;
  }
  // 3) adds: hard truncation at 2, then duplicate / content / axis cap
  for (std::size_t i = 0; i < patch.adds.size(); ++i) {
    const auto& op = patch.adds[i];
    if (i >= 2) {
      r.drop_reasons_in_order.push_back("add_limit");
      continue;
    }
    bool dup = false;
    for (const auto& e : r.entries) {
      if (e.active && e.axis == op.axis && norm(e.when) == norm(op.when) &&
          norm(e.guidance) == norm(op.guidance)) {
        dup = true;
      }
    }
    if (dup) {
      r.drop_reasons_in_order.push_back("duplicate");
      continue;
    }
    if (rule(op).has_value()) {
      r.drop_reasons_in_order.push_back("content_rejected");
      continue;
    }
    int active_count = 0;
    for (const auto& e : r.entries) {
      if (e.active && e.axis == op.axis) ++active_count;
    }
    if (active_count >= 5) {
      r.drop_reasons_in_order.push_back("axis_cap");
      continue;
    }
    int max_serial = 0;
    for (const auto& e : r.entries) {
      if (e.axis == op.axis) {
        max_serial = std::max(max_serial, std::atoi(e.id.c_str() + 1));
      }
    }
    Entry fresh;
    fresh.id = std::string(milkyway::axis_key(op.axis)) +
               std::to_string(max_serial + 1);
    fresh.axis = op.axis;
    fresh.when = op.when;
    fresh.guidance = op.guidance;
    fresh.created_at = checkpoint;
    r.entries.push_back(fresh);
    ++r.applied_adds;
  }

  if (r.applied_adds + r.applied_revises + r.applied_deprecates > 0) {
    ++r.version;
  }
  return r;
}

// Field-by-field comparison of a production state against the reference.
inline bool equivalent(const milkyway::HarnessState& state, const Result& ref) {
  if (state.version != ref.version) return false;
  if (state.entries.size() != ref.entries.size()) return false;
  for (std::size_t i = 0; i < ref.entries.size(); ++i) {
    const auto& a = state.entries[i];
    const auto& b = ref.entries[i];
    if (a.id != b.id || a.axis != b.axis || a.when != b.when ||
        a.guidance != b.guidance) {
      return false;
    }
    if ((a.status == milkyway::EntryStatus::Active) != b.active) return false;
    if (a.created_at_checkpoint != b.created_at) return false;
    if (a.revised_at_checkpoint.value_or(-1) != b.revised_at) return false;
  }
  return true;
}

}  // namespace reference
