#include "milkyway/serialize.hpp"

#include <stdexcept>

#include "milkyway/time_util.hpp"

namespace milkyway {

std::string canonical_dump(const Json& j) { return j.dump(2) + "\n"; }

Json to_json(const PredictionValue& v) {
  Json j;
  if (v.is_numeric()) {
    j["kind"] = "numeric";
    j["value"] = v.numeric();
  } else {
    j["kind"] = "choice";
    j["selected"] = v.choice().selected;
  }
  return j;
}

PredictionValue prediction_value_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "numeric") {
    return PredictionValue::numeric_value(j.at("value").get<double>());
  }
  if (kind == "choice") {
    return PredictionValue::choice_value(j.at("selected").get<std::vector<int>>());
  }
  throw ParseError("unknown prediction kind: " + kind);
}

Json to_json(const HarnessEntry& e) {
  Json j;
  j["id"] = e.id;
  j["axis"] = axis_key(e.axis);
  j["when"] = e.when;
  j["guidance"] = e.guidance;
  j["status"] = e.status == EntryStatus::Active ? "active" : "deprecated";
  j["created_at_checkpoint"] = e.created_at_checkpoint;
  if (e.revised_at_checkpoint) j["revised_at_checkpoint"] = *e.revised_at_checkpoint;
  if (e.deprecation_reason) j["deprecation_reason"] = *e.deprecation_reason;
  return j;
}

Json to_json(const HarnessState& s) {
  Json j;
  j["question_id"] = s.question_id;
  j["version"] = s.version;
  j["entries"] = Json::array();
  for (const auto& e : s.entries) j["entries"].push_back(to_json(e));
  return j;
}

HarnessState harness_state_from_json(const Json& j) {
  HarnessState s;
  s.question_id = j.at("question_id").get<std::string>();
  s.version = j.at("version").get<int>();
  for (const auto& ej : j.at("entries")) {
    HarnessEntry e;
    e.id = ej.at("id").get<std::string>();
    e.axis = axis_from_key(ej.at("axis").get<std::string>());
    e.when = ej.at("when").get<std::string>();
    e.guidance = ej.at("guidance").get<std::string>();
    e.status = ej.at("status").get<std::string>() == "active"
                   ? EntryStatus::Active
                   : EntryStatus::Deprecated;
    e.created_at_checkpoint = ej.at("created_at_checkpoint").get<int>();
    if (ej.contains("revised_at_checkpoint")) {
      e.revised_at_checkpoint = ej.at("revised_at_checkpoint").get<int>();
    }
    if (ej.contains("deprecation_reason")) {
      e.deprecation_reason = ej.at("deprecation_reason").get<std::string>();
    }
    s.entries.push_back(std::move(e));
  }
  return s;
}

Json to_json(const HarnessPatch& p) {
  Json add = Json::array();
  for (const auto& a : p.adds) {
    add.push_back({{"axis", axis_key(a.axis)}, {"when", a.when}, {"guidance", a.guidance}});
  }
  Json revise = Json::array();
  for (const auto& r : p.revises) {
    revise.push_back({{"id", r.target_id}, {"when", r.when}, {"guidance", r.guidance}});
  }
  Json deprecate = Json::array();
  for (const auto& d : p.deprecates) {
    deprecate.push_back({{"id", d.target_id}, {"reason", d.reason}});
  }
  Json j;
  j["add"] = std::move(add);
  j["revise"] = std::move(revise);
  j["deprecate"] = std::move(deprecate);
  return j;
}

HarnessPatch patch_from_json(const Json& j) {
  HarnessPatch p;
  if (j.contains("add")) {
    for (const auto& a : j.at("add")) {
      if (!a.contains("axis") || !a.contains("when") || !a.contains("guidance")) {
        throw ParseError("add entry missing axis/when/guidance");
      }
      p.adds.push_back({axis_from_key(a.at("axis").get<std::string>()),
                        a.at("when").get<std::string>(),
                        a.at("guidance").get<std::string>()});
    }
  }
  if (j.contains("revise")) {
    for (const auto& r : j.at("revise")) {
      if (!r.contains("id") || !r.contains("when") || !r.contains("guidance")) {
        throw ParseError("revise entry missing id/when/guidance");
      }
      p.revises.push_back({r.at("id").get<std::string>(),
                           r.at("when").get<std::string>(),
                           r.at("guidance").get<std::string>()});
    }
  }
  if (j.contains("deprecate")) {
    for (const auto& d : j.at("deprecate")) {
      if (!d.contains("id") || !d.contains("reason")) {
        throw ParseError("deprecate entry missing id/reason");
      }
      p.deprecates.push_back({d.at("id").get<std::string>(),
                              d.at("reason").get<std::string>()});
    }
  }
  return p;
}

Json to_json(const ApplyReport& r) {
  Json drops = Json::array();
  for (const auto& d : r.dropped_ops) {
    drops.push_back({{"op", d.op},
                     {"index", d.index},
                     {"reason", drop_reason_key(d.reason)},
                     {"detail", d.detail}});
  }
  Json j;
  j["applied_adds"] = r.applied_adds;
  j["applied_revises"] = r.applied_revises;
  j["applied_deprecates"] = r.applied_deprecates;
  j["dropped_ops"] = std::move(drops);
  j["resulting_version"] = r.resulting_version;
  return j;
}

Json to_json(const PreResolutionSignal& s) {
  Json j;
  j["prediction_divergence"] = s.prediction_divergence;
  j["diagnostic_findings"] = s.diagnostic_findings;
  return j;
}

Json to_json(const CheckpointNote& n) {
  Json j;
  j["question_id"] = n.question_id;
  j["checkpoint_index"] = n.checkpoint_index;
  j["checkpoint_time"] = format_timestamp(n.checkpoint_time);
  j["prediction"] = to_json(n.prediction);
  j["supporting_rationale"] = n.supporting_rationale;
  j["countervailing_rationale"] = n.countervailing_rationale;
  j["evidence_routes"] = n.evidence_routes;
  j["unresolved_concerns"] = n.unresolved_concerns;
  if (n.reflection) j["reflection"] = *n.reflection;
  return j;
}

CheckpointNote note_from_json(const Json& j) {
  CheckpointNote n;
  n.question_id = j.at("question_id").get<std::string>();
  n.checkpoint_index = j.at("checkpoint_index").get<int>();
  n.checkpoint_time = parse_timestamp(j.at("checkpoint_time").get<std::string>());
  n.prediction = prediction_value_from_json(j.at("prediction"));
  n.supporting_rationale = j.at("supporting_rationale").get<std::vector<std::string>>();
  n.countervailing_rationale =
      j.at("countervailing_rationale").get<std::vector<std::string>>();
  n.evidence_routes = j.at("evidence_routes").get<std::vector<std::string>>();
  n.unresolved_concerns = j.at("unresolved_concerns").get<std::vector<std::string>>();
  if (j.contains("reflection")) n.reflection = j.at("reflection").get<std::string>();
  return n;
}

Json to_json(const FinalizedPayload& p) {
  Json j;
  if (p.prediction) j["prediction"] = to_json(*p.prediction);
  j["supporting_evidence"] = p.supporting_evidence;
  j["counterevidence"] = p.counterevidence;
  j["unresolved_concerns"] = p.unresolved_concerns;
  j["evidence_routes"] = p.evidence_routes;
  return j;
}

FinalizedPayload payload_from_json(const Json& j) {
  FinalizedPayload p;
  if (j.contains("prediction")) {
    p.prediction = prediction_value_from_json(j.at("prediction"));
  }
  auto list = [&j](const char* key) -> std::vector<std::string> {
    if (!j.contains(key)) return {};
    return j.at(key).get<std::vector<std::string>>();
  };
  p.supporting_evidence = list("supporting_evidence");
  p.counterevidence = list("counterevidence");
  p.unresolved_concerns = list("unresolved_concerns");
  p.evidence_routes = list("evidence_routes");
  return p;
}

Json to_json(const RunTrace& t) {
  Json events = Json::array();
  for (const auto& e : t.events) {
    events.push_back({{"kind", e.kind}, {"detail", e.detail}});
  }
  Json j;
  j["tool_calls"] = t.tool_calls;
  j["llm_calls"] = t.llm_calls;
  j["prompt_tokens"] = t.prompt_tokens;
  j["evidence_violations"] = t.evidence_violations;
  j["events"] = std::move(events);
  return j;
}

std::string editor_document(const PreResolutionSignal& signal,
                            const HarnessPatch& update) {
  Json j;
  j["signal"] = to_json(signal);
  j["update"] = to_json(update);
  return canonical_dump(j);
}

}  // namespace milkyway
