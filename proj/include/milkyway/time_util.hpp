#pragma once

#include <cstdint>
#include <string>

namespace milkyway {

// Seconds since the Unix epoch, UTC. All schedule comparisons use this.
using Timestamp = std::int64_t;

// Accepts "YYYY-MM-DD" (midnight UTC) or "YYYY-MM-DDTHH:MM:SS" with an
// optional trailing 'Z'. Throws std::invalid_argument on anything else.
Timestamp parse_timestamp(const std::string& text);

// Always "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);

}  // namespace milkyway
