#include "milkyway/notes.hpp"

#include "milkyway/serialize.hpp"

namespace milkyway {

CheckpointNote construct_note(const RunTrace& trace, const FinalizedPayload& payload,
                              const std::string& question_id, int checkpoint_index,
                              Timestamp checkpoint_time) {
  if (!payload.prediction.has_value()) {
    throw ConstructionError("missing_prediction");
  }
  if (payload.prediction->is_choice() && payload.prediction->choice().selected.empty()) {
    throw ConstructionError("missing_prediction");
  }
  CheckpointNote note;
  note.question_id = question_id;
  note.checkpoint_index = checkpoint_index;
  note.checkpoint_time = checkpoint_time;
  note.prediction = *payload.prediction;
  note.supporting_rationale = payload.supporting_evidence;
  note.countervailing_rationale = payload.counterevidence;
  note.evidence_routes = payload.evidence_routes;
  note.unresolved_concerns = payload.unresolved_concerns;
  // The trace contributes only the optional reflection; the last one wins.
  for (const auto& event : trace.events) {
    if (event.kind == "reflection") note.reflection = event.detail;
  }
  return note;
}

NoteHistory append_note(const NoteHistory& history, const CheckpointNote& note) {
  const int expected = static_cast<int>(history.notes.size()) + 1;
  if (note.checkpoint_index != expected) {
    throw SequenceError("note index " + std::to_string(note.checkpoint_index) +
                        " does not follow history of length " +
                        std::to_string(history.notes.size()));
  }
  if (!history.notes.empty() &&
      note.checkpoint_time <= history.notes.back().checkpoint_time) {
    throw SequenceError("note time " + format_timestamp(note.checkpoint_time) +
                        " not after " +
                        format_timestamp(history.notes.back().checkpoint_time));
  }
  if (!history.notes.empty() && note.question_id != history.question_id) {
    throw SequenceError("note question " + note.question_id +
                        " does not match history " + history.question_id);
  }
  NoteHistory next = history;
  if (next.notes.empty() && next.question_id.empty()) {
    next.question_id = note.question_id;
  }
  next.notes.push_back(note);
  return next;
}

std::pair<PreResolutionSignal, HarnessPatch> parse_editor_output(const std::string& raw) {
  Json doc;
  try {
    doc = Json::parse(raw);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("unparseable editor document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("editor document is not an object");

  PreResolutionSignal signal;
  if (doc.contains("signal")) {
    const auto& s = doc.at("signal");
    if (!s.is_object()) throw ParseError("signal is not an object");
    try {
      if (s.contains("prediction_divergence")) {
        signal.prediction_divergence =
            s.at("prediction_divergence").get<std::vector<std::string>>();
      }
      if (s.contains("diagnostic_findings")) {
        signal.diagnostic_findings =
            s.at("diagnostic_findings").get<std::vector<std::string>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed signal lists: ") + e.what());
    }
  }

  HarnessPatch patch;
  if (doc.contains("update")) {
    const auto& u = doc.at("update");
    if (u.is_null()) return {signal, patch};
    if (!u.is_object()) throw ParseError("update is not an object");
    try {
      patch = patch_from_json(u);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(std::string("malformed update: ") + e.what());
    }
  }
  return {signal, patch};
}

}  // namespace milkyway
