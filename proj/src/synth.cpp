#include "drowsy/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include <json.hpp>

#include "drowsy/errors.hpp"

namespace drowsy {

std::string_view to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::open: return "open";
    case SegmentKind::blink: return "blink";
    case SegmentKind::drowsy: return "drowsy";
    case SegmentKind::occlusion: return "occlusion";
  }
  return "unknown";
}

SegmentKind segment_kind_from_string(std::string_view name) {
  for (SegmentKind k : {SegmentKind::open, SegmentKind::blink, SegmentKind::drowsy, SegmentKind::occlusion}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidScenario("unknown segment kind \"" + std::string(name) + "\"");
}

void Scenario::validate(const DetectorConfig& thresholds) const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidScenario(what);
  };
  require(std::isfinite(fps) && fps > 0.0 && fps <= 1000.0, "fps must be in (0, 1000]");
  require(duration_ms > 0, "duration_ms must be > 0");
  require(width > 0 && height > 0, "image dimensions must be positive");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "noise_sigma must be >= 0");
  auto check_closed = [&](double v) {
    require(v > 0.0 && v < thresholds.ear_close_threshold, "closed EAR must be in (0, ear_close_threshold)");
  };
  auto check_open = [&](double v) {
    require(v > thresholds.ear_open_threshold && v <= 1.0, "open EAR must be in (ear_open_threshold, 1]");
  };
  check_closed(closed_ear);
  check_open(open_ear);
  std::int64_t prev_end = 0;
  for (const Segment& s : segments) {
    require(s.start_ms >= 0 && s.start_ms < s.end_ms && s.end_ms <= duration_ms,
            "segment [" + std::to_string(s.start_ms) + ", " + std::to_string(s.end_ms) + ") outside session");
    require(s.start_ms >= prev_end, "segments must be sorted and non-overlapping");
    prev_end = s.end_ms;
    if (s.target_ear) {
      switch (s.kind) {
        case SegmentKind::open: check_open(*s.target_ear); break;
        case SegmentKind::blink:
        case SegmentKind::drowsy: check_closed(*s.target_ear); break;
        case SegmentKind::occlusion: require(false, "occlusion segments take no target EAR");
      }
    }
  }
}

std::int64_t frame_timestamp(std::size_t index, double fps) {
  return std::llround(static_cast<double>(index) * 1000.0 / fps);
}

namespace {

struct EyeGeometry {
  double cx;
  double cy;
  double outward;  // +1 when p1 lies to the right of p4
};

void place_eye(LandmarkMatrix& lm, const std::array<int, 6>& idx, const EyeGeometry& g, double target, int w,
               int h, std::mt19937_64& rng, double noise_px) {
  constexpr double half = kSyntheticEyeWidthPx / 2.0;
  const double x1 = g.cx + g.outward * half;
  const double x4 = g.cx - g.outward * half;
  const double xa = x1 + (x4 - x1) / 3.0;
  const double xb = x1 + 2.0 * (x4 - x1) / 3.0;
  const double lid = target * kSyntheticEyeWidthPx / 2.0;
  // p1..p6: outer corner, upper lid a, upper lid b, inner corner, lower lid b, lower lid a.
  const double px[6] = {x1, xa, xb, x4, xb, xa};
  const double py[6] = {g.cy, g.cy - lid, g.cy - lid, g.cy, g.cy + lid, g.cy + lid};
  std::normal_distribution<double> jitter(0.0, noise_px > 0.0 ? noise_px : 1.0);
  for (int i = 0; i < 6; ++i) {
    double x = px[i];
    double y = py[i];
    if (noise_px > 0.0) {
      x += jitter(rng);
      y += jitter(rng);
    }
    const int row = idx[static_cast<std::size_t>(i)];
    lm(row, 0) = x / w;
    lm(row, 1) = y / h;
    lm(row, 2) = 0.0;
  }
}

}  // namespace

MeshFrame make_eye_frame(double target_left, double target_right, std::int64_t ts_ms, int width, int height,
                         std::mt19937_64& rng, double noise_sigma, const EyeIndexMap& eyes) {
  if (!(target_left >= 0.0 && target_left <= 1.0 && target_right >= 0.0 && target_right <= 1.0)) {
    throw TargetOutOfRange("target EAR must be in [0, 1]");
  }
  LandmarkMatrix lm(kLandmarkCount, 3);
  // Face-region filler on a 1e-4 grid; one draw covers all three coordinates.
  for (int i = 0; i < kLandmarkCount; ++i) {
    const std::uint64_t r = rng();
    const auto kx = static_cast<double>((r & 0x1FFFFF) % 5001);
    const auto ky = static_cast<double>(((r >> 21) & 0x1FFFFF) % 5001);
    const auto kz = static_cast<double>(((r >> 42) & 0x1FFFFF) % 1001);
    lm(i, 0) = (2500.0 + kx) / 1e4;
    lm(i, 1) = (2500.0 + ky) / 1e4;
    lm(i, 2) = (kz - 500.0) / 1e4;
  }
  const double noise_px = noise_sigma * kSyntheticEyeWidthPx;
  const double cy = 0.42 * height;
  place_eye(lm, eyes.left, {0.38 * width, cy, -1.0}, target_left, width, height, rng, noise_px);
  place_eye(lm, eyes.right, {0.62 * width, cy, +1.0}, target_right, width, height, rng, noise_px);
  return MeshFrame::with_face(ts_ms, width, height, std::move(lm));
}

SessionLabels generate_frames(const Scenario& sc, const FrameCallback& emit, const DetectorConfig& thresholds) {
  sc.validate(thresholds);
  std::mt19937_64 rng(sc.seed);
  SessionLabels labels;
  auto seg = sc.segments.begin();
  for (std::size_t i = 0;; ++i) {
    const std::int64_t ts = frame_timestamp(i, sc.fps);
    if (ts >= sc.duration_ms) break;
    ++labels.frames;
    while (seg != sc.segments.end() && seg->end_ms <= ts) ++seg;
    const Segment* active = (seg != sc.segments.end() && seg->start_ms <= ts) ? &*seg : nullptr;
    const SegmentKind kind = active ? active->kind : SegmentKind::open;
    if (kind == SegmentKind::occlusion) {
      emit(MeshFrame::without_face(ts, sc.width, sc.height), std::nullopt);
      continue;
    }
    const double fallback = kind == SegmentKind::open ? sc.open_ear : sc.closed_ear;
    const double target = active && active->target_ear ? *active->target_ear : fallback;
    emit(make_eye_frame(target, target, ts, sc.width, sc.height, rng, sc.noise_sigma), target);
  }
  labels.fps = sc.fps;
  labels.duration_ms = sc.duration_ms;
  for (const Segment& s : sc.segments) {
    if (s.kind != SegmentKind::open) labels.episodes.push_back({s.kind, s.start_ms, s.end_ms});
  }
  return labels;
}

GeneratedSession gen_scenario(const Scenario& sc, const DetectorConfig& thresholds) {
  GeneratedSession out;
  out.labels = generate_frames(
      sc,
      [&](MeshFrame frame, std::optional<double> target) {
        out.frames.push_back(std::move(frame));
        out.target_ear.push_back(target);
      },
      thresholds);
  return out;
}

Scenario make_corpus_scenario(std::uint64_t seed, std::int64_t duration_ms, int drowsy_episodes,
                              double noise_sigma) {
  if (drowsy_episodes <= 0 || duration_ms < 30000LL * drowsy_episodes) {
    throw InvalidScenario("corpus session needs at least 30 s per drowsy episode");
  }
  Scenario sc;
  sc.duration_ms = duration_ms;
  sc.noise_sigma = noise_sigma;
  sc.seed = seed;
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  auto uniform = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  constexpr std::int64_t kGuardMs = 1000;
  const std::int64_t block = duration_ms / drowsy_episodes;
  for (int b = 0; b < drowsy_episodes; ++b) {
    const std::int64_t b0 = b * block;
    const std::int64_t b1 = b0 + block;
    const std::int64_t d0 = b0 + uniform(4000, block * 35 / 100);
    const Segment drowsy{SegmentKind::drowsy, d0, d0 + uniform(1500, 4000), {}};
    const std::int64_t o0 = b0 + uniform(block * 55 / 100, block * 80 / 100);
    const Segment occlusion{SegmentKind::occlusion, o0, std::min(o0 + uniform(500, 2500), b1 - 2000), {}};
    sc.segments.push_back(drowsy);
    sc.segments.push_back(occlusion);
    for (std::int64_t t = b0 + uniform(1000, 3000); t + 300 < b1; t += uniform(2500, 4500)) {
      const Segment blink{SegmentKind::blink, t, t + uniform(80, 240), {}};
      const std::array<Segment, 2> big{drowsy, occlusion};
      const bool clear = std::all_of(big.begin(), big.end(), [&](const Segment& b) {
        return blink.end_ms + kGuardMs <= b.start_ms || blink.start_ms >= b.end_ms + kGuardMs;
      });
      if (clear) sc.segments.push_back(blink);
    }
  }
  std::sort(sc.segments.begin(), sc.segments.end(),
            [](const Segment& a, const Segment& b) { return a.start_ms < b.start_ms; });
  return sc;
}

Scenario default_scenario() {
  Scenario sc;
  sc.duration_ms = 20000;
  sc.noise_sigma = 0.0;
  sc.seed = 1;
  sc.segments = {
      {SegmentKind::blink, 2000, 2120, {}},      {SegmentKind::blink, 5000, 5120, {}},
      {SegmentKind::drowsy, 8000, 11000, {}},    {SegmentKind::blink, 14000, 14160, {}},
      {SegmentKind::occlusion, 16000, 17000, {}},
  };
  return sc;
}

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) throw InvalidScenario(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw InvalidScenario(std::string("unknown ") + what + " field \"" + key + "\"");
    }
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Scenario scenario_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    reject_unknown(j,
                   {"fps", "duration_ms", "segments", "noise_sigma", "seed", "open_ear", "closed_ear", "width",
                    "height"},
                   "scenario");
    Scenario sc;
    read_opt(j, "fps", sc.fps);
    read_opt(j, "duration_ms", sc.duration_ms);
    read_opt(j, "noise_sigma", sc.noise_sigma);
    read_opt(j, "seed", sc.seed);
    read_opt(j, "open_ear", sc.open_ear);
    read_opt(j, "closed_ear", sc.closed_ear);
    read_opt(j, "width", sc.width);
    read_opt(j, "height", sc.height);
    if (j.contains("segments")) {
      for (const json& s : j.at("segments")) {
        reject_unknown(s, {"kind", "start_ms", "end_ms", "target_ear"}, "segment");
        Segment seg;
        seg.kind = segment_kind_from_string(s.at("kind").get<std::string>());
        seg.start_ms = s.at("start_ms").get<std::int64_t>();
        seg.end_ms = s.at("end_ms").get<std::int64_t>();
        if (s.contains("target_ear") && !s["target_ear"].is_null()) seg.target_ear = s["target_ear"].get<double>();
        sc.segments.push_back(seg);
      }
    }
    sc.validate();
    return sc;
  } catch (const json::exception& e) {
    throw InvalidScenario(std::string("bad scenario file: ") + e.what());
  }
}

std::string scenario_to_json(const Scenario& sc) {
  nlohmann::ordered_json j;
  j["fps"] = sc.fps;
  j["duration_ms"] = sc.duration_ms;
  j["noise_sigma"] = sc.noise_sigma;
  j["seed"] = sc.seed;
  j["open_ear"] = sc.open_ear;
  j["closed_ear"] = sc.closed_ear;
  j["width"] = sc.width;
  j["height"] = sc.height;
  j["segments"] = nlohmann::ordered_json::array();
  for (const Segment& s : sc.segments) {
    nlohmann::ordered_json js{{"kind", to_string(s.kind)}, {"start_ms", s.start_ms}, {"end_ms", s.end_ms}};
    if (s.target_ear) js["target_ear"] = *s.target_ear;
    j["segments"].push_back(js);
  }
  return j.dump(2);
}

SessionLabels labels_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    reject_unknown(j, {"fps", "duration_ms", "frames", "episodes"}, "labels");
    SessionLabels labels;
    labels.fps = j.at("fps").get<double>();
    labels.duration_ms = j.at("duration_ms").get<std::int64_t>();
    labels.frames = j.at("frames").get<std::size_t>();
    for (const json& e : j.at("episodes")) {
      reject_unknown(e, {"kind", "start_ms", "end_ms"}, "episode");
      const SegmentKind kind = segment_kind_from_string(e.at("kind").get<std::string>());
      if (kind == SegmentKind::open) throw InvalidScenario("open is not a labeled episode kind");
      labels.episodes.push_back({kind, e.at("start_ms").get<std::int64_t>(), e.at("end_ms").get<std::int64_t>()});
    }
    return labels;
  } catch (const json::exception& e) {
    throw InvalidScenario(std::string("bad labels file: ") + e.what());
  }
}

std::string labels_to_json(const SessionLabels& labels) {
  nlohmann::ordered_json j;
  j["fps"] = labels.fps;
  j["duration_ms"] = labels.duration_ms;
  j["frames"] = labels.frames;
  j["episodes"] = nlohmann::ordered_json::array();
  for (const LabeledEpisode& e : labels.episodes) {
    j["episodes"].push_back({{"kind", to_string(e.kind)}, {"start_ms", e.start_ms}, {"end_ms", e.end_ms}});
  }
  return j.dump(2);
}

}  // namespace drowsy
