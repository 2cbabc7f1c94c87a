#include "drowsy/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace drowsy {

void DetectorConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(std::isfinite(ear_close_threshold) && std::isfinite(ear_open_threshold),
          "EAR thresholds must be finite");
  require(ear_close_threshold > 0.0, "ear_close_threshold must be > 0");
  require(ear_close_threshold <= ear_open_threshold, "ear_close_threshold must be <= ear_open_threshold");
  require(ear_open_threshold < 1.0, "ear_open_threshold must be < 1");
  require(consec_frames > 0 && blink_min_frames > 0 && blink_max_frames > 0 && face_lost_grace_frames > 0 &&
              refractory_frames > 0,
          "frame counts must be > 0");
  require(blink_min_frames <= blink_max_frames, "blink_min_frames must be <= blink_max_frames");
  require(blink_max_frames < consec_frames, "blink_max_frames must be < consec_frames");
  require(perclos_window_ms > 0, "perclos_window_ms must be > 0");
  require(std::isfinite(min_blinks_per_min) && min_blinks_per_min >= 0.0, "min_blinks_per_min must be >= 0");
  require(smoothing_alpha >= 0.0 && smoothing_alpha <= 1.0, "smoothing_alpha must be in [0, 1]");
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::blink: return "blink";
    case EventKind::closure: return "closure";
    case EventKind::drowsy_onset: return "drowsy_onset";
    case EventKind::drowsy_end: return "drowsy_end";
    case EventKind::low_blink_rate: return "low_blink_rate";
    case EventKind::face_lost: return "face_lost";
    case EventKind::face_found: return "face_found";
  }
  return "unknown";
}

EventKind event_kind_from_string(std::string_view name) {
  for (EventKind k : kAllEventKinds) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown event kind \"" + std::string(name) + "\"");
}

double perclos(const DetectorState& state) {
  if (state.perclos_frames.empty()) {
    throw EmptyWindow("PERCLOS window has no valid frames");
  }
  return static_cast<double>(state.perclos_closed) / static_cast<double>(state.perclos_frames.size());
}

double blink_rate(const DetectorState& state, const DetectorConfig& config) {
  if (!state.window_origin_ms || !state.last_valid_ts_ms) {
    throw EmptyWindow("blink-rate window has no valid frames");
  }
  const std::int64_t covered = std::min(*state.last_valid_ts_ms - *state.window_origin_ms, config.perclos_window_ms);
  if (state.blink_times.empty() || covered <= 0) {
    return 0.0;
  }
  return static_cast<double>(state.blink_times.size()) * 60000.0 / static_cast<double>(covered);
}

namespace {

EyeEvent make_event(std::int64_t ts, EventKind kind, std::optional<double> ear = {},
                    std::optional<int> closed_frames = {}, std::optional<double> perclos_value = {}) {
  return EyeEvent{ts, kind, ear, closed_frames, perclos_value};
}

void update_windows(DetectorState& s, std::int64_t ts, bool closed, std::int64_t window_ms) {
  if (!s.window_origin_ms) s.window_origin_ms = ts;
  s.last_valid_ts_ms = ts;
  s.perclos_frames.push_back({ts, closed});
  if (closed) ++s.perclos_closed;
  const std::int64_t horizon = ts - window_ms;
  while (!s.perclos_frames.empty() && s.perclos_frames.front().ts_ms <= horizon) {
    if (s.perclos_frames.front().closed) --s.perclos_closed;
    s.perclos_frames.pop_front();
  }
  while (!s.blink_times.empty() && s.blink_times.front() <= horizon) {
    s.blink_times.pop_front();
  }
}

}  // namespace

void detector_step_in_place(DetectorState& s, const EarSample& sample, const DetectorConfig& cfg,
                            std::vector<EyeEvent>& out) {
  const std::int64_t ts = sample.ts_ms;
  if (s.last_ts_ms && ts <= *s.last_ts_ms) {
    throw OutOfOrder("sample at " + std::to_string(ts) + " ms not after " + std::to_string(*s.last_ts_ms) + " ms");
  }
  s.last_ts_ms = ts;

  const bool refractory = s.refractory_remaining > 0;
  if (refractory) --s.refractory_remaining;

  const SmoothedEar smoothed = smooth_ear(s.smoothed_ear, sample, cfg.smoothing_alpha);
  s.smoothed_ear = smoothed.value;

  if (!sample.valid) {
    // Occlusion suspends closure counting; only after the grace period is the face declared lost.
    ++s.frames_since_face;
    if (s.frames_since_face == cfg.face_lost_grace_frames) {
      if (s.mode == DetectorMode::drowsy) {
        out.push_back(make_event(ts, EventKind::drowsy_end, {}, s.closed_count, perclos(s)));
        s.refractory_remaining = cfg.refractory_frames;
      }
      out.push_back(make_event(ts, EventKind::face_lost));
      s.mode = DetectorMode::no_face;
      s.closed_count = 0;
    }
    return;
  }

  if (s.mode == DetectorMode::no_face) {
    out.push_back(make_event(ts, EventKind::face_found));
    s.mode = DetectorMode::open;
  }
  s.frames_since_face = 0;

  const double ear = cfg.smoothing_alpha > 0.0 ? *smoothed.value : *sample.mean_ear;
  s.last_effective_ear = ear;

  // Hysteresis: closing below the close threshold, reopening only above the open threshold.
  const bool was_closed = s.mode == DetectorMode::closing || s.mode == DetectorMode::drowsy;
  const bool closed = was_closed ? !(ear > cfg.ear_open_threshold) : ear < cfg.ear_close_threshold;

  update_windows(s, ts, closed, cfg.perclos_window_ms);

  if (was_closed && !closed) {
    const int run = s.closed_count;
    if (s.mode == DetectorMode::drowsy) {
      out.push_back(make_event(ts, EventKind::drowsy_end, ear, run, perclos(s)));
      s.refractory_remaining = cfg.refractory_frames;
    } else if (run >= cfg.blink_min_frames && run <= cfg.blink_max_frames) {
      out.push_back(make_event(ts, EventKind::blink, ear, run));
      s.blink_times.push_back(ts);
    } else {
      out.push_back(make_event(ts, EventKind::closure, ear, run));
    }
    s.mode = DetectorMode::open;
    s.closed_count = 0;
  } else if (closed) {
    if (!was_closed) s.mode = DetectorMode::closing;
    ++s.closed_count;
    if (s.mode == DetectorMode::closing && s.closed_count >= cfg.consec_frames && !refractory) {
      out.push_back(make_event(ts, EventKind::drowsy_onset, ear, s.closed_count, perclos(s)));
      s.mode = DetectorMode::drowsy;
    }
  }

  if (cfg.min_blinks_per_min > 0.0 && ts - *s.window_origin_ms >= cfg.perclos_window_ms &&
      (!s.last_low_rate_alert_ms || ts - *s.last_low_rate_alert_ms >= cfg.perclos_window_ms) &&
      blink_rate(s, cfg) < cfg.min_blinks_per_min) {
    out.push_back(make_event(ts, EventKind::low_blink_rate, ear));
    s.last_low_rate_alert_ms = ts;
  }
}

StepResult detector_step(DetectorState state, const EarSample& sample, const DetectorConfig& config) {
  StepResult result{std::move(state), {}};
  detector_step_in_place(result.state, sample, config, result.events);
  return result;
}

std::vector<EyeEvent> finalize(DetectorState& s) {
  std::vector<EyeEvent> out;
  if (!s.last_ts_ms) return out;
  if (s.mode == DetectorMode::drowsy) {
    out.push_back(make_event(*s.last_ts_ms, EventKind::drowsy_end, s.last_effective_ear, s.closed_count,
                             s.perclos_frames.empty() ? std::optional<double>{} : perclos(s)));
  } else if (s.mode == DetectorMode::closing && s.closed_count > 0) {
    out.push_back(make_event(*s.last_ts_ms, EventKind::closure, s.last_effective_ear, s.closed_count));
  }
  if (s.mode != DetectorMode::no_face) s.mode = DetectorMode::open;
  s.closed_count = 0;
  return out;
}

Detector::Detector(DetectorConfig config) : config_(config) { config_.validate(); }

const std::vector<EyeEvent>& Detector::step(const EarSample& sample) {
  scratch_.clear();
  detector_step_in_place(state_, sample, config_, scratch_);
  return scratch_;
}

std::vector<EyeEvent> Detector::finalize() { return drowsy::finalize(state_); }

}  // namespace drowsy
