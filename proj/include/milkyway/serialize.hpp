#pragma once

#include <string>

#include <json.hpp>

#include "milkyway/harness.hpp"
#include "milkyway/notes.hpp"
#include "milkyway/scoring.hpp"

namespace milkyway {

// All ledger artifacts use one canonical form: ordered keys, two-space
// indentation, trailing newline. Digests over artifacts rely on this.
using Json = nlohmann::ordered_json;

std::string canonical_dump(const Json& j);

Json to_json(const PredictionValue& v);
PredictionValue prediction_value_from_json(const Json& j);

Json to_json(const HarnessEntry& e);
Json to_json(const HarnessState& s);
HarnessState harness_state_from_json(const Json& j);

// Patch serialization follows the editor update schema: add entries carry
// axis/when/guidance; revise carries id/when/guidance; deprecate id/reason.
Json to_json(const HarnessPatch& p);
HarnessPatch patch_from_json(const Json& j);

Json to_json(const ApplyReport& r);

Json to_json(const PreResolutionSignal& s);
Json to_json(const CheckpointNote& n);
CheckpointNote note_from_json(const Json& j);

Json to_json(const FinalizedPayload& p);
FinalizedPayload payload_from_json(const Json& j);

Json to_json(const RunTrace& t);

// Full editor document: {"signal": ..., "update": ...}.
std::string editor_document(const PreResolutionSignal& signal,
                            const HarnessPatch& update);

}  // namespace milkyway
