#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drowsy/detector.hpp"
#include "drowsy/synth.hpp"

namespace drowsy {

inline constexpr std::int64_t kDefaultMatchToleranceMs = 500;

/// Event-level detection quality of one session (or a pooled corpus).
struct EvalReport {
  std::size_t labeled_episodes = 0;
  std::size_t matched_episodes = 0;
  double drowsy_recall = 0.0;
  std::size_t missed_episodes = 0;
  std::size_t false_alerts = 0;
  std::size_t occlusion_alerts = 0;  // false alerts inside an occlusion label (+ tolerance)
  double false_alert_rate_per_hour = 0.0;
  double mean_latency_ms = 0.0;
  double max_latency_ms = 0.0;
  std::size_t detected_blinks = 0;
  std::size_t labeled_blinks = 0;
  std::size_t blink_count_error = 0;
  std::size_t frames_evaluated = 0;
  std::int64_t duration_ms = 0;
  std::vector<std::int64_t> latencies_ms;  // per matched episode
};

/// Greedy one-to-one matching in time order: a drowsy_onset matches the
/// earliest unmatched drowsy label whose [start, end + tolerance] contains
/// it; unmatched onsets are false alerts. A session with no drowsy labels
/// has recall 1. Throws UnsortedEvents.
EvalReport evaluate(const std::vector<EyeEvent>& events, const SessionLabels& labels,
                    std::int64_t match_tolerance_ms = kDefaultMatchToleranceMs);

struct CorpusReport {
  std::vector<EvalReport> sessions;
  EvalReport pooled;  // micro-averaged over all episodes
  double macro_recall = 0.0;  // mean of per-session recalls
};

CorpusReport pool_reports(std::vector<EvalReport> sessions);

std::string report_to_json(const EvalReport& report);
std::string corpus_report_to_json(const CorpusReport& report);
/// Human-readable summary table.
std::string report_table(const CorpusReport& report);

}  // namespace drowsy
