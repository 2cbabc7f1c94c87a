#include "drowsy/events.hpp"

#include <charconv>

#include <json.hpp>

#include "drowsy/errors.hpp"

namespace drowsy {

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  out.append(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

void append_number(std::string& out, std::int64_t v) {
  char buf[24];
  out.append(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

}  // namespace

void event_to_json(const EyeEvent& event, std::string& out) {
  out.clear();
  out += "{\"ts_ms\":";
  append_number(out, event.ts_ms);
  out += ",\"type\":\"";
  out += to_string(event.kind);
  out += '"';
  if (event.ear) {
    out += ",\"ear\":";
    append_number(out, *event.ear);
  }
  if (event.closed_frames) {
    out += ",\"closed_frames\":";
    append_number(out, static_cast<std::int64_t>(*event.closed_frames));
  }
  if (event.perclos) {
    out += ",\"perclos\":";
    append_number(out, *event.perclos);
  }
  out += '}';
}

std::string event_to_json(const EyeEvent& event) {
  std::string out;
  event_to_json(event, out);
  return out;
}

EyeEvent event_from_json(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    EyeEvent ev;
    ev.ts_ms = j.at("ts_ms").get<std::int64_t>();
    ev.kind = event_kind_from_string(j.at("type").get<std::string>());
    if (j.contains("ear") && !j["ear"].is_null()) ev.ear = j["ear"].get<double>();
    if (j.contains("closed_frames") && !j["closed_frames"].is_null()) ev.closed_frames = j["closed_frames"].get<int>();
    if (j.contains("perclos") && !j["perclos"].is_null()) ev.perclos = j["perclos"].get<double>();
    return ev;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad event record: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(e.what());
  }
}

}  // namespace drowsy
