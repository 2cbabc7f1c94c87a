#include "drowsy/bench.hpp"

#include <json.hpp>

#include "drowsy/synth.hpp"

namespace drowsy {

BenchResult run_bench(std::size_t frames, std::uint64_t seed, const DetectorConfig& config) {
  BenchResult result;
  std::vector<std::string> lines;
  if (frames > 0) {
    constexpr double kFps = 25.0;
    // Whole 30 s blocks, each holding one drowsy episode.
    const auto needed_ms = static_cast<std::int64_t>(frames) * 40 + 40;
    const std::int64_t blocks = std::max<std::int64_t>(1, (needed_ms + 29999) / 30000);
    Scenario sc = make_corpus_scenario(seed, blocks * 30000, static_cast<int>(blocks));
    sc.fps = kFps;
    lines.reserve(frames);
    generate_frames(
        sc,
        [&](MeshFrame frame, std::optional<double>) {
          if (lines.size() < frames) lines.push_back(serialize_frame(frame));
        },
        config);
  }

  MemorySource source(lines);
  Alarm alarm(AlertPolicy{{}, AlertAction::none, {}});
  PipelineOptions options;
  options.bad_line_budget = 0;
  const RunSummary summary = run_pipeline(source, Pacing::fast, config, alarm, {}, options);

  result.frames = summary.frames_processed;
  result.seconds = summary.wall_seconds;
  result.frames_per_second = result.seconds > 0.0 ? static_cast<double>(result.frames) / result.seconds : 0.0;
  result.latency = measure_latency(summary);
  result.events = summary.total_events();
  return result;
}

std::string bench_to_json(const BenchResult& r) {
  nlohmann::ordered_json j;
  j["frames"] = r.frames;
  j["seconds"] = r.seconds;
  j["frames_per_second"] = r.frames_per_second;
  j["realtime_headroom_at_25fps"] = r.frames_per_second / 25.0;
  if (r.latency.empty()) {
    j["latency_ms"] = nullptr;
  } else {
    j["latency_ms"] = {{"p50", r.latency.p50_ms}, {"p95", r.latency.p95_ms}, {"max", r.latency.max_ms}};
  }
  j["events"] = r.events;
  return j.dump();
}

}  // namespace drowsy
