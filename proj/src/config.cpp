#include "milkyway/config.hpp"

#include <fstream>

#include "milkyway/serialize.hpp"

namespace milkyway {

std::vector<std::string> default_forbidden_vocabulary() {
  return {
      "propose_harness_update",
      "prediction_divergence",
      "diagnostic_findings",
      "\"axis\"",
      "\"when\"",
      "\"guidance\"",
      "\"add\"",
      "\"revise\"",
      "\"deprecate\"",
  };
}

namespace {

const char* kDefaultPrior =
    "You are a research-driven future prediction agent. The event is "
    "unresolved at checkpoint time. Gather predictive evidence available "
    "by the checkpoint time only, audit the question's target, answer "
    "space, constraints, and resolution rule, and end with the structured "
    "finalization action recording the prediction, supporting evidence, "
    "counterevidence, and unresolved concerns. Keep confidence bounded "
    "when evidence is thin.";

}  // namespace

RunConfig default_run_config() {
  RunConfig config;
  config.prior = kDefaultPrior;
  return config;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config file: ") + e.what());
  }

  RunConfig config = default_run_config();
  if (j.contains("prior")) config.prior = j["prior"].get<std::string>();
  if (j.contains("prior_file")) {
    std::ifstream pf(j["prior_file"].get<std::string>());
    if (!pf) throw ConfigError("cannot open prior_file");
    config.prior.assign(std::istreambuf_iterator<char>(pf), {});
  }
  if (j.contains("budgets")) {
    const auto& b = j["budgets"];
    if (b.contains("max_tool_calls")) {
      config.budgets.max_tool_calls = b["max_tool_calls"].get<int>();
    }
    if (b.contains("max_context_tokens")) {
      config.budgets.max_context_tokens = b["max_context_tokens"].get<std::int64_t>();
    }
    if (b.contains("gh_byte_budget")) {
      config.budgets.gh_byte_budget = b["gh_byte_budget"].get<std::int64_t>();
    }
    if (b.contains("gh_write_calls")) {
      config.budgets.gh_write_calls = b["gh_write_calls"].get<int>();
    }
  }
  if (j.contains("chars_per_token")) {
    config.length_fn.chars_per_token = j["chars_per_token"].get<double>();
  }
  if (j.contains("checkpoint_retries")) {
    config.checkpoint_retries = j["checkpoint_retries"].get<int>();
  }
  if (j.contains("max_guidance_chars")) {
    config.content_rule.max_guidance_chars = j["max_guidance_chars"].get<std::size_t>();
  }
  if (j.contains("forbidden_patterns")) {
    config.content_rule.forbidden_patterns =
        j["forbidden_patterns"].get<std::vector<std::string>>();
  }
  if (j.contains("score_epsilon")) {
    config.score_epsilon = j["score_epsilon"].get<double>();
  }
  if (j.contains("gh_fixed_byte_budget")) {
    config.gh_fixed_byte_budget = j["gh_fixed_byte_budget"].get<std::int64_t>();
  }
  if (j.contains("gh_write_calls")) {
    config.gh_write_calls = j["gh_write_calls"].get<int>();
  }
  if (j.contains("paired_gh_budget")) {
    config.paired_gh_budget = j["paired_gh_budget"].get<bool>();
  }
  if (j.contains("forbidden_vocabulary")) {
    config.forbidden_vocabulary =
        j["forbidden_vocabulary"].get<std::vector<std::string>>();
  }
  if (j.contains("initial_harness_file")) {
    config.initial_harness_file =
        std::filesystem::path(j["initial_harness_file"].get<std::string>());
  }
  if (j.contains("seed")) config.seed = j["seed"].get<std::int64_t>();
  config.budgets.validate();
  return config;
}

}  // namespace milkyway
