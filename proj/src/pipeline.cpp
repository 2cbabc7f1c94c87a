#include "drowsy/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "drowsy/ear.hpp"
#include "drowsy/errors.hpp"

namespace drowsy {

std::size_t RunSummary::total_events() const {
  std::size_t n = 0;
  for (const auto& [kind, count] : events_by_kind) n += count;
  return n;
}

LatencyStats measure_latency(const RunSummary& summary) {
  LatencyStats stats;
  if (summary.frame_cost_ms.empty()) return stats;
  std::vector<double> costs = summary.frame_cost_ms;
  std::sort(costs.begin(), costs.end());
  auto rank = [&](double q) {
    const auto n = costs.size();
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    idx = std::clamp<std::size_t>(idx, 1, n);
    return costs[idx - 1];
  };
  stats.frames = costs.size();
  stats.p50_ms = rank(0.50);
  stats.p95_ms = rank(0.95);
  stats.max_ms = costs.back();
  return stats;
}

std::string summary_to_json(const RunSummary& summary) {
  nlohmann::ordered_json j;
  j["status"] = summary.status;
  j["lines_read"] = summary.lines_read;
  j["frames"] = summary.frames_processed;
  j["valid_frames"] = summary.valid_frames;
  j["invalid_frames"] = summary.invalid_frames;
  j["bad_lines"] = summary.bad_lines;
  j["alarms_fired"] = summary.alarms_fired;
  nlohmann::ordered_json events = nlohmann::ordered_json::object();
  for (EventKind kind : kAllEventKinds) {
    const auto it = summary.events_by_kind.find(kind);
    events[std::string(to_string(kind))] = it == summary.events_by_kind.end() ? 0 : it->second;
  }
  j["events"] = events;
  const LatencyStats lat = measure_latency(summary);
  if (lat.empty()) {
    j["latency_ms"] = nullptr;
  } else {
    j["latency_ms"] = {{"p50", lat.p50_ms}, {"p95", lat.p95_ms}, {"max", lat.max_ms}};
  }
  j["wall_seconds"] = summary.wall_seconds;
  return j.dump();
}

namespace {

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

RunSummary run_pipeline(LineSource& source, Pacing pacing, const DetectorConfig& config, Alarm& alarm,
                        std::span<EventSink* const> sinks, const PipelineOptions& options) {
  using clock = std::chrono::steady_clock;
  config.validate();
  options.eyes.validate();

  RunSummary summary;
  SinkDispatcher dispatcher(std::vector<EventSink*>(sinks.begin(), sinks.end()), options.sink_queue_capacity);
  DetectorState state;
  TimestampGuard guard;
  std::vector<EyeEvent> events;
  std::string_view line;

  const auto wall_start = clock::now();
  std::optional<clock::time_point> pace_origin;
  std::int64_t first_ts = 0;

  auto emit = [&](const std::vector<EyeEvent>& batch) {
    for (const EyeEvent& ev : batch) {
      ++summary.events_by_kind[ev.kind];
      dispatcher.publish(ev);
      if (alarm.maybe_fire(ev)) ++summary.alarms_fired;
    }
  };

  while (source.next_view(line)) {
    ++summary.lines_read;
    if (is_blank(line)) continue;
    const auto t0 = clock::now();

    std::optional<MeshFrame> frame;
    try {
      frame = parse_frame(line);
    } catch (const ParseError& e) {
      if (++summary.bad_lines > options.bad_line_budget) {
        throw ParseError(std::string(e.what()) + " (bad-line budget exhausted)", summary.lines_read);
      }
      continue;
    } catch (const SchemaError& e) {
      if (++summary.bad_lines > options.bad_line_budget) {
        throw ParseError(std::string(e.what()) + " (bad-line budget exhausted)", summary.lines_read);
      }
      continue;
    }
    try {
      guard.check(frame->ts_ms());
    } catch (const OutOfOrder& e) {
      throw OutOfOrder("line " + std::to_string(summary.lines_read) + ": " + e.what());
    }
    auto cost = clock::now() - t0;

    if (pacing == Pacing::realtime) {
      if (!pace_origin) {
        pace_origin = clock::now();
        first_ts = frame->ts_ms();
      }
      std::this_thread::sleep_until(*pace_origin + std::chrono::milliseconds(frame->ts_ms() - first_ts));
    }

    const auto t1 = clock::now();
    const EarSample sample = frame_ear(*frame, options.eyes);
    ++summary.frames_processed;
    ++(sample.valid ? summary.valid_frames : summary.invalid_frames);
    events.clear();
    detector_step_in_place(state, sample, config, events);
    emit(events);
    cost += clock::now() - t1;
    summary.frame_cost_ms.push_back(std::chrono::duration<double, std::milli>(cost).count());
  }

  emit(finalize(state));
  dispatcher.close();
  summary.wall_seconds = std::chrono::duration<double>(clock::now() - wall_start).count();
  return summary;
}

RunSummary run_pipeline(const SourceSpec& source, const DetectorConfig& config, const AlertPolicy& policy,
                        std::span<EventSink* const> sinks, const PipelineOptions& options) {
  auto src = open_source(source, std::cin);
  Alarm alarm(policy, &std::cerr);
  return run_pipeline(*src, source.pacing, config, alarm, sinks, options);
}

}  // namespace drowsy
