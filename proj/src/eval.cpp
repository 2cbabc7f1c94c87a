#include "drowsy/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "drowsy/errors.hpp"

namespace drowsy {

namespace {

void finish(EvalReport& r) {
  r.missed_episodes = r.labeled_episodes - r.matched_episodes;
  r.drowsy_recall = r.labeled_episodes == 0
                        ? 1.0
                        : static_cast<double>(r.matched_episodes) / static_cast<double>(r.labeled_episodes);
  r.false_alert_rate_per_hour =
      r.duration_ms > 0 ? static_cast<double>(r.false_alerts) * 3.6e6 / static_cast<double>(r.duration_ms) : 0.0;
  if (!r.latencies_ms.empty()) {
    const auto sum = std::accumulate(r.latencies_ms.begin(), r.latencies_ms.end(), std::int64_t{0});
    r.mean_latency_ms = static_cast<double>(sum) / static_cast<double>(r.latencies_ms.size());
    r.max_latency_ms = static_cast<double>(*std::max_element(r.latencies_ms.begin(), r.latencies_ms.end()));
  } else {
    r.mean_latency_ms = 0.0;
    r.max_latency_ms = 0.0;
  }
  r.blink_count_error = r.detected_blinks > r.labeled_blinks ? r.detected_blinks - r.labeled_blinks
                                                              : r.labeled_blinks - r.detected_blinks;
}

}  // namespace

EvalReport evaluate(const std::vector<EyeEvent>& events, const SessionLabels& labels,
                    std::int64_t match_tolerance_ms) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].ts_ms < events[i - 1].ts_ms) {
      throw UnsortedEvents("event " + std::to_string(i) + " precedes its predecessor");
    }
  }
  std::vector<LabeledEpisode> drowsy;
  std::vector<LabeledEpisode> occlusions;
  EvalReport r;
  for (const LabeledEpisode& e : labels.episodes) {
    if (e.kind == SegmentKind::drowsy) drowsy.push_back(e);
    if (e.kind == SegmentKind::occlusion) occlusions.push_back(e);
    if (e.kind == SegmentKind::blink) ++r.labeled_blinks;
  }
  std::sort(drowsy.begin(), drowsy.end(),
            [](const LabeledEpisode& a, const LabeledEpisode& b) { return a.start_ms < b.start_ms; });
  std::vector<bool> matched(drowsy.size(), false);

  r.labeled_episodes = drowsy.size();
  r.frames_evaluated = labels.frames;
  r.duration_ms = labels.duration_ms;

  for (const EyeEvent& ev : events) {
    if (ev.kind == EventKind::blink) ++r.detected_blinks;
    if (ev.kind != EventKind::drowsy_onset) continue;
    bool hit = false;
    for (std::size_t i = 0; i < drowsy.size(); ++i) {
      if (!matched[i] && ev.ts_ms >= drowsy[i].start_ms && ev.ts_ms <= drowsy[i].end_ms + match_tolerance_ms) {
        matched[i] = true;
        ++r.matched_episodes;
        r.latencies_ms.push_back(ev.ts_ms - drowsy[i].start_ms);
        hit = true;
        break;
      }
    }
    if (hit) continue;
    ++r.false_alerts;
    const bool in_occlusion = std::any_of(occlusions.begin(), occlusions.end(), [&](const LabeledEpisode& o) {
      return ev.ts_ms >= o.start_ms && ev.ts_ms <= o.end_ms + match_tolerance_ms;
    });
    if (in_occlusion) ++r.occlusion_alerts;
  }
  finish(r);
  return r;
}

CorpusReport pool_reports(std::vector<EvalReport> sessions) {
  CorpusReport c;
  c.sessions = std::move(sessions);
  double recall_sum = 0.0;
  for (const EvalReport& s : c.sessions) {
    EvalReport& p = c.pooled;
    p.labeled_episodes += s.labeled_episodes;
    p.matched_episodes += s.matched_episodes;
    p.false_alerts += s.false_alerts;
    p.occlusion_alerts += s.occlusion_alerts;
    p.detected_blinks += s.detected_blinks;
    p.labeled_blinks += s.labeled_blinks;
    p.frames_evaluated += s.frames_evaluated;
    p.duration_ms += s.duration_ms;
    p.latencies_ms.insert(p.latencies_ms.end(), s.latencies_ms.begin(), s.latencies_ms.end());
    recall_sum += s.drowsy_recall;
  }
  finish(c.pooled);
  // Pooled blink error is the sum of per-session errors, not the error of the sums.
  c.pooled.blink_count_error = 0;
  for (const EvalReport& s : c.sessions) c.pooled.blink_count_error += s.blink_count_error;
  c.macro_recall = c.sessions.empty() ? 1.0 : recall_sum / static_cast<double>(c.sessions.size());
  return c;
}

namespace {

nlohmann::ordered_json report_json(const EvalReport& r) {
  return {{"drowsy_recall", r.drowsy_recall},
          {"labeled_episodes", r.labeled_episodes},
          {"matched_episodes", r.matched_episodes},
          {"missed_episodes", r.missed_episodes},
          {"false_alerts", r.false_alerts},
          {"occlusion_alerts", r.occlusion_alerts},
          {"false_alert_rate_per_hour", r.false_alert_rate_per_hour},
          {"mean_latency_ms", r.mean_latency_ms},
          {"max_latency_ms", r.max_latency_ms},
          {"detected_blinks", r.detected_blinks},
          {"labeled_blinks", r.labeled_blinks},
          {"blink_count_error", r.blink_count_error},
          {"frames_evaluated", r.frames_evaluated},
          {"duration_ms", r.duration_ms}};
}

}  // namespace

std::string report_to_json(const EvalReport& report) { return report_json(report).dump(); }

std::string corpus_report_to_json(const CorpusReport& report) {
  nlohmann::ordered_json j;
  j["pooled"] = report_json(report.pooled);
  j["macro_recall"] = report.macro_recall;
  j["sessions"] = nlohmann::ordered_json::array();
  for (const EvalReport& s : report.sessions) j["sessions"].push_back(report_json(s));
  return j.dump();
}

std::string report_table(const CorpusReport& report) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %8s %8s %8s %8s %10s %10s %8s\n", "session", "recall", "matched", "labeled",
                "false", "fa/hour", "lat_ms", "blinkerr");
  out += buf;
  auto row = [&](const std::string& name, const EvalReport& r) {
    std::snprintf(buf, sizeof buf, "%-8s %8.3f %8zu %8zu %8zu %10.2f %10.1f %8zu\n", name.c_str(), r.drowsy_recall,
                  r.matched_episodes, r.labeled_episodes, r.false_alerts, r.false_alert_rate_per_hour,
                  r.mean_latency_ms, r.blink_count_error);
    out += buf;
  };
  for (std::size_t i = 0; i < report.sessions.size(); ++i) row(std::to_string(i), report.sessions[i]);
  row("pooled", report.pooled);
  std::snprintf(buf, sizeof buf, "macro recall %.3f\n", report.macro_recall);
  out += buf;
  return out;
}

}  // namespace drowsy
