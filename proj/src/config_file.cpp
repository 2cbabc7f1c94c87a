#include "drowsy/config_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "drowsy/errors.hpp"

namespace drowsy {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  T v{};
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw ConfigError("invalid value \"" + std::string(text) + "\" for " + std::string(key));
  }
  return v;
}

void append_double(std::string& out, double v) {
  char buf[32];
  out.append(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

}  // namespace

void set_config_value(DetectorConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "ear_close_threshold") c.ear_close_threshold = parse_value<double>(key, value);
  else if (key == "ear_open_threshold") c.ear_open_threshold = parse_value<double>(key, value);
  else if (key == "consec_frames") c.consec_frames = parse_value<int>(key, value);
  else if (key == "blink_min_frames") c.blink_min_frames = parse_value<int>(key, value);
  else if (key == "blink_max_frames") c.blink_max_frames = parse_value<int>(key, value);
  else if (key == "perclos_window_ms") c.perclos_window_ms = parse_value<std::int64_t>(key, value);
  else if (key == "min_blinks_per_min") c.min_blinks_per_min = parse_value<double>(key, value);
  else if (key == "face_lost_grace_frames") c.face_lost_grace_frames = parse_value<int>(key, value);
  else if (key == "refractory_frames") c.refractory_frames = parse_value<int>(key, value);
  else if (key == "smoothing_alpha") c.smoothing_alpha = parse_value<double>(key, value);
  else throw ConfigError("unknown config key \"" + std::string(key) + "\"");
}

DetectorConfig apply_config_text(std::string_view text, DetectorConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

DetectorConfig load_config_file(const std::string& path, DetectorConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return apply_config_text(ss.str(), base);
}

std::string config_to_text(const DetectorConfig& c) {
  std::string out;
  auto put = [&](const char* key, auto v) {
    out += key;
    out += " = ";
    if constexpr (std::is_floating_point_v<decltype(v)>) {
      append_double(out, v);
    } else {
      out += std::to_string(v);
    }
    out += '\n';
  };
  put("ear_close_threshold", c.ear_close_threshold);
  put("ear_open_threshold", c.ear_open_threshold);
  put("consec_frames", c.consec_frames);
  put("blink_min_frames", c.blink_min_frames);
  put("blink_max_frames", c.blink_max_frames);
  put("perclos_window_ms", c.perclos_window_ms);
  put("min_blinks_per_min", c.min_blinks_per_min);
  put("face_lost_grace_frames", c.face_lost_grace_frames);
  put("refractory_frames", c.refractory_frames);
  put("smoothing_alpha", c.smoothing_alpha);
  return out;
}

}  // namespace drowsy
