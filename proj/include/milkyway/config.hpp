#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "milkyway/harness.hpp"
#include "milkyway/ports.hpp"

namespace milkyway {

// Default token list scanned by the generic-memory audit: the structured
// update schema's operation and field key tokens in their document form,
// plus the editor call name. Bare English words are deliberately not on
// the list; a free-prose blob only trips the audit when it reproduces the
// typed schema vocabulary itself.
std::vector<std::string> default_forbidden_vocabulary();

struct RunConfig {
  std::string prior;  // fixed prior B, a config asset
  Budgets budgets;
  LengthFn length_fn;
  int checkpoint_retries = 0;  // retries change compute matching; off by default
  ContentRuleConfig content_rule;
  double score_epsilon = 1e-9;
  // GH byte budget when not derived from a paired FH run.
  std::int64_t gh_fixed_byte_budget = 1024;
  int gh_write_calls = 1;
  bool paired_gh_budget = true;
  std::vector<std::string> forbidden_vocabulary = default_forbidden_vocabulary();
  std::optional<std::filesystem::path> initial_harness_file;  // snapshot-seeded H1
  std::optional<std::int64_t> seed;  // recorded in run artifacts only
};

RunConfig default_run_config();
RunConfig load_run_config(const std::filesystem::path& file);

}  // namespace milkyway
