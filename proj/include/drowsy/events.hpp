#pragma once

#include <string>
#include <string_view>

#include "drowsy/detector.hpp"

namespace drowsy {

/// One event-sink record, without the trailing newline:
/// {"ts_ms":..,"type":"..","ear":..,"closed_frames":..,"perclos":..}
/// Absent optional fields are omitted.
std::string event_to_json(const EyeEvent& event);
void event_to_json(const EyeEvent& event, std::string& out);

/// Inverse of event_to_json. Throws ParseError on malformed input.
EyeEvent event_from_json(std::string_view line);

}  // namespace drowsy
