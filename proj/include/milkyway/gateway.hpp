#pragma once

#include <memory>
#include <string>

#include "milkyway/ports.hpp"

namespace milkyway {

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GatewayConfig {
  std::string base_url;           // e.g. "http://127.0.0.1:8080"
  std::string model;
  std::string api_key;            // resolved from api_key_env when empty
  std::string api_key_env = "MILKYWAY_API_KEY";
  std::string chat_path = "/v1/chat/completions";
  double temperature = 0.0;
  int max_agent_turns = 64;       // hard stop for the tool-use loop
  int evidence_items_per_call = 5;
  int timeout_seconds = 120;

  std::string resolved_api_key() const;
};

// Chat-completion backbone adapter. The BaseAgent side runs a tool-use
// loop (search_evidence / finalize_prediction) against the supplied
// EvidenceSource until the structured finalization action or tool-budget
// denial; the editor side makes exactly one structured call and returns
// the raw document for archival and parsing.
std::unique_ptr<BaseAgentPort> make_gateway_base_agent(GatewayConfig config,
                                                       std::string prior,
                                                       LengthFn length_fn = {});

std::unique_ptr<EditorPort> make_gateway_editor(GatewayConfig config,
                                                std::string editor_prompt);

}  // namespace milkyway
