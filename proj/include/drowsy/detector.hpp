#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>
#include <vector>

#include "drowsy/ear.hpp"

namespace drowsy {

/// Thresholds and windows for the per-frame state machine.
struct DetectorConfig {
  double ear_close_threshold = 0.25;
  double ear_open_threshold = 0.28;
  int consec_frames = 20;
  int blink_min_frames = 1;
  int blink_max_frames = 7;
  std::int64_t perclos_window_ms = 60000;
  double min_blinks_per_min = 6.0;
  int face_lost_grace_frames = 10;
  int refractory_frames = 25;
  double smoothing_alpha = 0.0;

  /// Throws ConfigError on any invariant violation.
  void validate() const;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

enum class EventKind { blink, closure, drowsy_onset, drowsy_end, low_blink_rate, face_lost, face_found };

inline constexpr EventKind kAllEventKinds[] = {EventKind::blink,          EventKind::closure,
                                               EventKind::drowsy_onset,   EventKind::drowsy_end,
                                               EventKind::low_blink_rate, EventKind::face_lost,
                                               EventKind::face_found};

std::string_view to_string(EventKind kind);
/// Throws ConfigError on an unknown name.
EventKind event_kind_from_string(std::string_view name);

struct EyeEvent {
  std::int64_t ts_ms = 0;
  EventKind kind = EventKind::blink;
  std::optional<double> ear;
  std::optional<int> closed_frames;
  std::optional<double> perclos;

  friend bool operator==(const EyeEvent&, const EyeEvent&) = default;
};

enum class DetectorMode { no_face, open, closing, drowsy };

struct DetectorState {
  DetectorMode mode = DetectorMode::open;
  int closed_count = 0;
  int frames_since_face = 0;  // consecutive invalid samples
  int refractory_remaining = 0;
  std::optional<double> smoothed_ear;
  std::optional<double> last_effective_ear;
  std::optional<std::int64_t> last_ts_ms;

  // PERCLOS window over valid frames: (ts, classified closed).
  struct WindowFrame {
    std::int64_t ts_ms;
    bool closed;
  };
  std::deque<WindowFrame> perclos_frames;
  std::size_t perclos_closed = 0;

  // Blink-rate window.
  std::deque<std::int64_t> blink_times;
  std::optional<std::int64_t> window_origin_ms;  // first valid frame of the session
  std::optional<std::int64_t> last_valid_ts_ms;
  std::optional<std::int64_t> last_low_rate_alert_ms;
};

struct StepResult {
  DetectorState state;
  std::vector<EyeEvent> events;
};

/// Pure transition: consumes the state and returns its successor plus the
/// events emitted on this sample. Throws OutOfOrder on a non-increasing ts_ms.
StepResult detector_step(DetectorState state, const EarSample& sample, const DetectorConfig& config);

/// In-place form of detector_step; appends emitted events to `out`.
void detector_step_in_place(DetectorState& state, const EarSample& sample, const DetectorConfig& config,
                            std::vector<EyeEvent>& out);

/// Fraction of valid frames in the rolling window classified closed.
/// Throws EmptyWindow before the first valid frame.
double perclos(const DetectorState& state);

/// Blinks in the rolling window per minute, normalized by the covered span
/// (which is capped at the window length). Throws EmptyWindow before the first valid frame.
double blink_rate(const DetectorState& state, const DetectorConfig& config);

/// End-of-stream repair: closes an open drowsy episode or reports a
/// partial closure run. Leaves the state in open mode.
std::vector<EyeEvent> finalize(DetectorState& state);

/// Owning convenience wrapper for one stream.
class Detector {
 public:
  explicit Detector(DetectorConfig config = {});

  /// Events emitted for this sample.
  const std::vector<EyeEvent>& step(const EarSample& sample);
  std::vector<EyeEvent> finalize();

  const DetectorState& state() const { return state_; }
  const DetectorConfig& config() const { return config_; }

 private:
  DetectorConfig config_;
  DetectorState state_;
  std::vector<EyeEvent> scratch_;
};

}  // namespace drowsy
