#include "milkyway/gateway.hpp"

#include <cstdlib>
#include <sstream>

#include <httplib.h>

#include "milkyway/serialize.hpp"

namespace milkyway {

std::string GatewayConfig::resolved_api_key() const {
  if (!api_key.empty()) return api_key;
  const char* env = std::getenv(api_key_env.c_str());
  return env ? env : "";
}

namespace {

Json chat_request(const GatewayConfig& config, const Json& messages, const Json& tools) {
  Json req;
  req["model"] = config.model;
  req["temperature"] = config.temperature;
  req["messages"] = messages;
  if (!tools.is_null()) req["tools"] = tools;
  return req;
}

Json post_chat(const GatewayConfig& config, const Json& request) {
  httplib::Client client(config.base_url);
  client.set_read_timeout(config.timeout_seconds, 0);
  client.set_connection_timeout(config.timeout_seconds, 0);
  httplib::Headers headers;
  const std::string key = config.resolved_api_key();
  if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

  auto result = client.Post(config.chat_path, headers, request.dump(),
                            "application/json");
  if (!result) {
    throw TransportError("gateway request failed: " +
                         httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw TransportError("gateway returned status " +
                         std::to_string(result->status) + ": " + result->body);
  }
  try {
    return Json::parse(result->body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("gateway returned malformed JSON: ") + e.what());
  }
}

const Json& response_message(const Json& response) {
  if (!response.contains("choices") || response["choices"].empty() ||
      !response["choices"][0].contains("message")) {
    throw TransportError("gateway response missing choices[0].message");
  }
  return response["choices"][0]["message"];
}

Json agent_tools() {
  return Json::parse(R"([
    {"type": "function", "function": {
      "name": "search_evidence",
      "description": "Search time-stamped public evidence available at the checkpoint time.",
      "parameters": {"type": "object", "properties": {"query": {"type": "string"}},
                     "required": ["query"]}}},
    {"type": "function", "function": {
      "name": "finalize_prediction",
      "description": "End the run with the structured finalization payload.",
      "parameters": {"type": "object", "properties": {
        "prediction": {},
        "supporting_evidence": {"type": "array", "items": {"type": "string"}},
        "counterevidence": {"type": "array", "items": {"type": "string"}},
        "unresolved_concerns": {"type": "array", "items": {"type": "string"}},
        "evidence_routes": {"type": "array", "items": {"type": "string"}}},
        "required": ["prediction"]}}}
  ])");
}

FinalizedPayload payload_from_arguments(const std::string& arguments) {
  Json j;
  try {
    j = Json::parse(arguments);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed finalization arguments: ") + e.what());
  }
  FinalizedPayload payload;
  if (j.contains("prediction")) {
    const auto& p = j["prediction"];
    if (p.is_number()) {
      payload.prediction = PredictionValue::numeric_value(p.get<double>());
    } else if (p.is_object()) {
      payload.prediction = prediction_value_from_json(p);
    }
  }
  auto list = [&j](const char* key) -> std::vector<std::string> {
    if (!j.contains(key) || !j[key].is_array()) return {};
    std::vector<std::string> out;
    for (const auto& item : j[key]) {
      if (item.is_string()) out.push_back(item.get<std::string>());
    }
    return out;
  };
  payload.supporting_evidence = list("supporting_evidence");
  payload.counterevidence = list("counterevidence");
  payload.unresolved_concerns = list("unresolved_concerns");
  payload.evidence_routes = list("evidence_routes");
  return payload;
}

std::int64_t estimate_tokens(const Json& messages, const LengthFn& length_fn) {
  return length_fn.tokens(messages.dump());
}

// Replaces the oldest tool-result contents until the conversation fits the
// context cap; keeps the system prompt and the newest turns intact.
void enforce_context_cap(Json& messages, const Budgets& budgets,
                         const LengthFn& length_fn) {
  for (auto& msg : messages) {
    if (estimate_tokens(messages, length_fn) <= budgets.max_context_tokens) return;
    if (msg.contains("role") && msg["role"] == "tool" &&
        msg["content"] != "[truncated]") {
      msg["content"] = "[truncated]";
    }
  }
}

class GatewayBaseAgent : public BaseAgentPort {
 public:
  GatewayBaseAgent(GatewayConfig config, std::string prior, LengthFn length_fn)
      : config_(std::move(config)), prior_(std::move(prior)), length_fn_(length_fn) {}

  std::pair<RunTrace, FinalizedPayload> run(const Question& question,
                                            Timestamp checkpoint_time,
                                            const std::string& guidance,
                                            EvidenceSource& evidence,
                                            const Budgets& budgets) override {
    RunTrace trace;
    const std::string prompt = assemble_base_prompt(prior_, question, guidance);
    Json messages = Json::array();
    messages.push_back({{"role", "system"}, {"content", prompt}});
    messages.push_back(
        {{"role", "user"},
         {"content", "Checkpoint time: " + format_timestamp(checkpoint_time) +
                         ". Gather evidence, then call finalize_prediction."}});

    for (int turn = 0; turn < config_.max_agent_turns; ++turn) {
      enforce_context_cap(messages, budgets, length_fn_);
      trace.prompt_tokens += estimate_tokens(messages, length_fn_);
      Json response = post_chat(config_, chat_request(config_, messages, agent_tools()));
      ++trace.llm_calls;
      const Json& message = response_message(response);
      messages.push_back(message);

      if (!message.contains("tool_calls") || message["tool_calls"].empty()) {
        // No structured action; nudge once toward finalization.
        messages.push_back({{"role", "user"},
                            {"content", "Call finalize_prediction to end the run."}});
        continue;
      }
      for (const auto& call : message["tool_calls"]) {
        const std::string name = call["function"]["name"].get<std::string>();
        const std::string call_id =
            call.contains("id") ? call["id"].get<std::string>() : "call";
        if (name == "finalize_prediction") {
          trace.events.push_back({"finalize", "gateway"});
          return {std::move(trace),
                  payload_from_arguments(call["function"]["arguments"].get<std::string>())};
        }
        if (name == "search_evidence") {
          std::string content;
          if (!tool_budget_allows(trace.tool_calls, budgets)) {
            content =
                "Tool budget exhausted. Finalize now with current evidence "
                "via finalize_prediction.";
            trace.events.push_back({"budget_denied", "search_evidence"});
          } else {
            Json args = Json::parse(call["function"]["arguments"].get<std::string>());
            const std::string query = args.value("query", "");
            auto items = evidence.query(query, checkpoint_time);
            ++trace.tool_calls;
            Json listing = Json::array();
            int kept = 0;
            for (const auto& item : items) {
              if (kept++ >= config_.evidence_items_per_call) break;
              listing.push_back({{"id", item.id},
                                 {"timestamp", format_timestamp(item.timestamp)},
                                 {"text", item.text}});
            }
            content = listing.dump();
            trace.events.push_back({"tool_call", "search_evidence: " + query});
          }
          messages.push_back({{"role", "tool"},
                              {"tool_call_id", call_id},
                              {"content", content}});
        } else {
          messages.push_back({{"role", "tool"},
                              {"tool_call_id", call_id},
                              {"content", "unknown tool: " + name}});
        }
      }
    }
    throw TransportError("agent did not finalize within " +
                         std::to_string(config_.max_agent_turns) + " turns");
  }

 private:
  GatewayConfig config_;
  std::string prior_;
  LengthFn length_fn_;
};

class GatewayEditor : public EditorPort {
 public:
  GatewayEditor(GatewayConfig config, std::string editor_prompt)
      : config_(std::move(config)), editor_prompt_(std::move(editor_prompt)) {}

  std::string propose(const HarnessState& state, const NoteHistory& history) override {
    Json notes = Json::array();
    for (const auto& note : history.notes) notes.push_back(to_json(note));
    std::ostringstream user;
    user << "Current harness:\n" << canonical_dump(to_json(state)) << "\n";
    user << "Ordered checkpoint note history:\n" << notes.dump(2) << "\n";
    user << "Call propose_harness_update exactly once with both signal and update.";

    Json messages = Json::array();
    messages.push_back({{"role", "system"}, {"content", editor_prompt_}});
    messages.push_back({{"role", "user"}, {"content", user.str()}});

    Json tools = Json::parse(R"([
      {"type": "function", "function": {
        "name": "propose_harness_update",
        "description": "Return the pre-resolution signal and the bounded harness update.",
        "parameters": {"type": "object",
                       "properties": {"signal": {}, "update": {}},
                       "required": ["signal", "update"]}}}
    ])");

    Json response = post_chat(config_, chat_request(config_, messages, tools));
    const Json& message = response_message(response);
    if (message.contains("tool_calls") && !message["tool_calls"].empty()) {
      return message["tool_calls"][0]["function"]["arguments"].get<std::string>();
    }
    if (message.contains("content") && message["content"].is_string()) {
      return message["content"].get<std::string>();
    }
    throw TransportError("editor response carries neither tool call nor content");
  }

 private:
  GatewayConfig config_;
  std::string editor_prompt_;
};

}  // namespace

std::unique_ptr<BaseAgentPort> make_gateway_base_agent(GatewayConfig config,
                                                       std::string prior,
                                                       LengthFn length_fn) {
  return std::make_unique<GatewayBaseAgent>(std::move(config), std::move(prior),
                                            length_fn);
}

std::unique_ptr<EditorPort> make_gateway_editor(GatewayConfig config,
                                                std::string editor_prompt) {
  return std::make_unique<GatewayEditor>(std::move(config), std::move(editor_prompt));
}

}  // namespace milkyway
