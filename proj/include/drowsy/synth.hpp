#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "drowsy/detector.hpp"
#include "drowsy/mesh.hpp"

namespace drowsy {

enum class SegmentKind { open, blink, drowsy, occlusion };

std::string_view to_string(SegmentKind kind);
/// Throws InvalidScenario on an unknown name.
SegmentKind segment_kind_from_string(std::string_view name);

struct Segment {
  SegmentKind kind = SegmentKind::open;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;  // exclusive
  std::optional<double> target_ear;  // overrides the scenario's open/closed EAR

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// A scripted session. Frames not covered by any segment are open-eyed.
struct Scenario {
  double fps = 25.0;
  std::int64_t duration_ms = 10000;
  std::vector<Segment> segments;
  double noise_sigma = 0.01;  // EAR units; realized as landmark position noise
  std::uint64_t seed = 0;
  double open_ear = 0.32;
  double closed_ear = 0.10;
  int width = 640;
  int height = 480;

  /// Throws InvalidScenario. Closed targets must sit below the close
  /// threshold and open targets above the open threshold of `thresholds`.
  void validate(const DetectorConfig& thresholds = {}) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct LabeledEpisode {
  SegmentKind kind = SegmentKind::drowsy;  // drowsy, blink or occlusion
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;

  friend bool operator==(const LabeledEpisode&, const LabeledEpisode&) = default;
};

/// Ground truth for a generated session, copied from its scenario segments.
struct SessionLabels {
  double fps = 25.0;
  std::int64_t duration_ms = 0;
  std::size_t frames = 0;
  std::vector<LabeledEpisode> episodes;

  friend bool operator==(const SessionLabels&, const SessionLabels&) = default;
};

struct GeneratedSession {
  std::vector<MeshFrame> frames;
  std::vector<std::optional<double>> target_ear;  // per frame; absent for occluded frames
  SessionLabels labels;
};

/// Pixel width of the synthetic canonical eye.
inline constexpr double kSyntheticEyeWidthPx = 60.0;

/// Builds a frame whose left/right eyes have exactly the requested EAR
/// before noise. Remaining landmarks are drawn from `rng` on a 1e-4 grid.
/// `noise_sigma` (EAR units) adds Gaussian jitter of noise_sigma * eye width
/// pixels to every eye landmark. Throws TargetOutOfRange unless targets are in [0, 1].
MeshFrame make_eye_frame(double target_left, double target_right, std::int64_t ts_ms, int width, int height,
                         std::mt19937_64& rng, double noise_sigma = 0.0,
                         const EyeIndexMap& eyes = default_eye_indices());

/// Timestamp of frame `index` at `fps`.
std::int64_t frame_timestamp(std::size_t index, double fps);

/// Receives each generated frame with its pre-noise target EAR (absent when occluded).
using FrameCallback = std::function<void(MeshFrame, std::optional<double>)>;

/// Streams the scenario's frames in order and returns its labels.
/// Deterministic given the scenario (including its seed). Throws InvalidScenario.
SessionLabels generate_frames(const Scenario& scenario, const FrameCallback& emit,
                              const DetectorConfig& thresholds = {});

/// Materialized form of generate_frames.
GeneratedSession gen_scenario(const Scenario& scenario, const DetectorConfig& thresholds = {});

/// Randomized session script split into `drowsy_episodes` blocks, each with
/// one drowsy segment, one occlusion and blinks every few seconds.
Scenario make_corpus_scenario(std::uint64_t seed, std::int64_t duration_ms = 300000, int drowsy_episodes = 5,
                              double noise_sigma = 0.01);

/// Short noise-free scenario with one drowsy episode and a few blinks.
Scenario default_scenario();

// File formats (JSON objects).
Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& scenario);
SessionLabels labels_from_json(const std::string& text);
std::string labels_to_json(const SessionLabels& labels);

}  // namespace drowsy
