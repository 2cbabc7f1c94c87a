#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "drowsy/ear.hpp"
#include "drowsy/errors.hpp"
#include "drowsy/eval.hpp"
#include "drowsy/synth.hpp"
#include "test_support.hpp"

namespace drowsy {
namespace {

std::vector<EyeEvent> detect(const GeneratedSession& g, const DetectorConfig& cfg = {}) {
  Detector det(cfg);
  std::vector<EyeEvent> out;
  for (const MeshFrame& f : g.frames) {
    const auto& ev = det.step(frame_ear(f));
    out.insert(out.end(), ev.begin(), ev.end());
  }
  const auto tail = det.finalize();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

Scenario noise_free(std::int64_t duration_ms, std::vector<Segment> segments) {
  Scenario sc;
  sc.duration_ms = duration_ms;
  sc.noise_sigma = 0.0;
  sc.seed = 3;
  sc.segments = std::move(segments);
  return sc;
}

EyeEvent onset(std::int64_t ts) { return {ts, EventKind::drowsy_onset, 0.1, 20, 0.5}; }

SessionLabels labels_of(std::vector<LabeledEpisode> eps, std::int64_t duration_ms = 60000) {
  SessionLabels l;
  l.duration_ms = duration_ms;
  l.frames = static_cast<std::size_t>(duration_ms / 40);
  l.episodes = std::move(eps);
  return l;
}

TEST(MakeEyeFrame, ExactTargets) {
  std::mt19937_64 rng(1);
  const EarSample half = frame_ear(make_eye_frame(0.5, 0.5, 0, 640, 480, rng));
  EXPECT_NEAR(*half.mean_ear, 0.5, 1e-9);
  const EarSample shut = frame_ear(make_eye_frame(0.0, 0.0, 0, 640, 480, rng));
  EXPECT_NEAR(*shut.mean_ear, 0.0, 1e-12);
  const EarSample mixed = frame_ear(make_eye_frame(0.2, 0.4, 0, 640, 480, rng));
  EXPECT_NEAR(*mixed.mean_ear, 0.3, 1e-9);
}

TEST(MakeEyeFrame, OtherResolutions) {
  std::mt19937_64 rng(2);
  for (auto [w, h] : {std::pair{1280, 720}, std::pair{320, 240}, std::pair{1920, 1080}}) {
    const EarSample s = frame_ear(make_eye_frame(0.31, 0.29, 0, w, h, rng));
    EXPECT_NEAR(*s.mean_ear, 0.30, 1e-9) << w << "x" << h;
  }
}

TEST(MakeEyeFrame, RejectsTargetsOutsideUnitRange) {
  std::mt19937_64 rng(3);
  EXPECT_THROW(make_eye_frame(-0.01, 0.3, 0, 640, 480, rng), TargetOutOfRange);
  EXPECT_THROW(make_eye_frame(0.3, 1.01, 0, 640, 480, rng), TargetOutOfRange);
  EXPECT_THROW(make_eye_frame(std::nan(""), 0.3, 0, 640, 480, rng), TargetOutOfRange);
  EXPECT_NO_THROW(make_eye_frame(1.0, 0.0, 0, 640, 480, rng));
}

TEST(MakeEyeFrame, NoiseSpreadsEar) {
  std::mt19937_64 rng(4);
  double sum = 0.0, sq = 0.0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    const double e = *frame_ear(make_eye_frame(0.32, 0.32, 0, 640, 480, rng, 0.01)).mean_ear;
    sum += e;
    sq += e * e;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(mean, 0.32, 0.003);
  EXPECT_GT(sd, 0.002);
  EXPECT_LT(sd, 0.02);
}

TEST(GenScenario, EmptyScenario) {
  const GeneratedSession g = gen_scenario(noise_free(10000, {}));
  EXPECT_EQ(g.frames.size(), 250u);
  EXPECT_TRUE(g.labels.episodes.empty());
  EXPECT_EQ(g.labels.frames, 250u);
  EXPECT_EQ(g.frames.back().ts_ms(), 9960);
  for (const auto& f : g.frames) EXPECT_NEAR(*frame_ear(f).mean_ear, 0.32, 1e-9);
}

TEST(GenScenario, DrowsySegmentFrameCount) {
  const GeneratedSession g = gen_scenario(noise_free(10000, {{SegmentKind::drowsy, 2000, 4000, {}}}));
  std::size_t closed = 0;
  for (const auto& f : g.frames) {
    const double e = *frame_ear(f).mean_ear;
    if (std::abs(e - 0.10) < 1e-9) {
      ++closed;
      EXPECT_GE(f.ts_ms(), 2000);
      EXPECT_LT(f.ts_ms(), 4000);
    }
  }
  EXPECT_EQ(closed, 50u);
  ASSERT_EQ(g.labels.episodes.size(), 1u);
  EXPECT_EQ(g.labels.episodes[0], (LabeledEpisode{SegmentKind::drowsy, 2000, 4000}));
}

TEST(GenScenario, OcclusionSpan) {
  const GeneratedSession g = gen_scenario(noise_free(5000, {{SegmentKind::occlusion, 1000, 1500, {}}}));
  for (const auto& f : g.frames) {
    const bool inside = f.ts_ms() >= 1000 && f.ts_ms() < 1500;
    EXPECT_EQ(f.face_present(), !inside) << f.ts_ms();
  }
}

TEST(GenScenario, RoundTripEveryFrame) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Scenario sc = make_corpus_scenario(seed, 60000, 2, 0.0);
    sc.segments.push_back({SegmentKind::open, 59000, 59500, 0.45});
    const GeneratedSession g = gen_scenario(sc);
    for (std::size_t i = 0; i < g.frames.size(); ++i) {
      const MeshFrame back = parse_frame(serialize_frame(g.frames[i]));
      const EarSample s = frame_ear(back);
      ASSERT_EQ(s.valid, g.target_ear[i].has_value());
      if (s.valid) {
        EXPECT_NEAR(*s.left_ear, *g.target_ear[i], 1e-9);
        EXPECT_NEAR(*s.right_ear, *g.target_ear[i], 1e-9);
      }
    }
  }
}

TEST(GenScenario, Deterministic) {
  const Scenario sc = make_corpus_scenario(17, 60000, 2, 0.01);
  auto text = [&] {
    std::ostringstream out;
    write_session(out, gen_scenario(sc).frames);
    return out.str();
  };
  const std::string a = text();
  EXPECT_EQ(a, text());
  EXPECT_EQ(labels_to_json(gen_scenario(sc).labels), labels_to_json(gen_scenario(sc).labels));
  Scenario other = sc;
  other.seed = 18;
  std::ostringstream out;
  write_session(out, gen_scenario(other).frames);
  EXPECT_NE(a, out.str());
}

TEST(GenScenario, RejectsInvalidScenarios) {
  EXPECT_THROW(gen_scenario(noise_free(1000, {{SegmentKind::drowsy, 500, 1500, {}}})), InvalidScenario);
  EXPECT_THROW(gen_scenario(noise_free(5000, {{SegmentKind::drowsy, 2000, 3000, {}},
                                              {SegmentKind::blink, 2500, 2600, {}}})),
               InvalidScenario);
  EXPECT_THROW(gen_scenario(noise_free(5000, {{SegmentKind::blink, 300, 200, {}}})), InvalidScenario);
  EXPECT_THROW(gen_scenario(noise_free(5000, {{SegmentKind::drowsy, 200, 900, 0.26}})), InvalidScenario);
  EXPECT_THROW(gen_scenario(noise_free(5000, {{SegmentKind::open, 200, 900, 0.27}})), InvalidScenario);
  Scenario sc = noise_free(5000, {});
  sc.closed_ear = 0.25;
  EXPECT_THROW(gen_scenario(sc), InvalidScenario);
  sc = noise_free(5000, {});
  sc.fps = 0;
  EXPECT_THROW(gen_scenario(sc), InvalidScenario);
}

TEST(GenScenario, PerfectDetectorBound) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const GeneratedSession g = gen_scenario(make_corpus_scenario(seed, 150000, 5, 0.0));
    const EvalReport r = evaluate(detect(g), g.labels);
    EXPECT_EQ(r.drowsy_recall, 1.0);
    EXPECT_EQ(r.false_alerts, 0u);
    EXPECT_EQ(r.blink_count_error, 0u);
  }
}

TEST(GenScenario, LatencyIdentity) {
  for (int start_frame : {50, 73, 120}) {
    const std::int64_t start = start_frame * 40;
    const GeneratedSession g = gen_scenario(noise_free(10000, {{SegmentKind::drowsy, start, start + 2000, {}}}));
    const EvalReport r = evaluate(detect(g), g.labels);
    ASSERT_EQ(r.latencies_ms.size(), 1u);
    // Onset on the 20th closed frame: 19 frame periods after the first one.
    EXPECT_EQ(r.latencies_ms[0], 19 * 40);
    EXPECT_LE(std::abs(static_cast<double>(r.latencies_ms[0]) - 20 * 40.0), 40.0);
  }
}

TEST(GenScenario, OcclusionOnlyNeverAlerts) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Segment> segs;
    for (std::int64_t t = 500; t + 5000 < 60000;) {
      const std::int64_t len = std::uniform_int_distribution<std::int64_t>(40, 5000)(rng);
      segs.push_back({SegmentKind::occlusion, t, t + len, {}});
      t += len + std::uniform_int_distribution<std::int64_t>(40, 2000)(rng);
    }
    Scenario sc = noise_free(60000, segs);
    sc.noise_sigma = 0.01;
    sc.seed = static_cast<std::uint64_t>(trial);
    const GeneratedSession g = gen_scenario(sc);
    const auto ev = detect(g);
    EXPECT_EQ(testing::count_kind(ev, EventKind::drowsy_onset), 0u);
    EXPECT_EQ(evaluate(ev, g.labels).occlusion_alerts, 0u);
  }
}

TEST(Evaluate, OneOnsetPerEpisode) {
  const auto labels =
      labels_of({{SegmentKind::drowsy, 1000, 3000}, {SegmentKind::blink, 5000, 5100}, {SegmentKind::drowsy, 8000, 9000}});
  const EvalReport r = evaluate({onset(1760), {5120, EventKind::blink, 0.3, 3, {}}, onset(8760)}, labels);
  EXPECT_EQ(r.drowsy_recall, 1.0);
  EXPECT_EQ(r.false_alerts, 0u);
  EXPECT_EQ(r.matched_episodes, 2u);
  EXPECT_EQ(r.mean_latency_ms, 760.0);
  EXPECT_EQ(r.max_latency_ms, 760.0);
  EXPECT_EQ(r.blink_count_error, 0u);
}

TEST(Evaluate, NoEvents) {
  const EvalReport r = evaluate({}, labels_of({{SegmentKind::drowsy, 1000, 3000}}));
  EXPECT_EQ(r.drowsy_recall, 0.0);
  EXPECT_EQ(r.false_alerts, 0u);
  EXPECT_EQ(r.missed_episodes, 1u);
}

TEST(Evaluate, OnsetOutsideEpisodes) {
  const EvalReport r = evaluate({onset(20000)}, labels_of({{SegmentKind::drowsy, 1000, 3000}}, 3600000));
  EXPECT_EQ(r.false_alerts, 1u);
  EXPECT_EQ(r.drowsy_recall, 0.0);
  EXPECT_DOUBLE_EQ(r.false_alert_rate_per_hour, 1.0);
}

TEST(Evaluate, ToleranceAndGreedyMatching) {
  const auto labels = labels_of({{SegmentKind::drowsy, 1000, 3000}});
  EXPECT_EQ(evaluate({onset(3500)}, labels).matched_episodes, 1u);
  EXPECT_EQ(evaluate({onset(3501)}, labels).false_alerts, 1u);
  EXPECT_EQ(evaluate({onset(999)}, labels).false_alerts, 1u);
  EXPECT_EQ(evaluate({onset(3600)}, labels, 600).matched_episodes, 1u);
  // A second onset in the same episode is a false alert.
  const EvalReport twice = evaluate({onset(1500), onset(2500)}, labels);
  EXPECT_EQ(twice.matched_episodes, 1u);
  EXPECT_EQ(twice.false_alerts, 1u);
  EXPECT_EQ(twice.latencies_ms, (std::vector<std::int64_t>{500}));
}

TEST(Evaluate, OcclusionAttribution) {
  const auto labels = labels_of({{SegmentKind::occlusion, 1000, 2000}});
  const EvalReport r = evaluate({onset(1200), onset(2400), onset(9000)}, labels);
  EXPECT_EQ(r.false_alerts, 3u);
  EXPECT_EQ(r.occlusion_alerts, 2u);
  EXPECT_EQ(r.drowsy_recall, 1.0);
  EXPECT_EQ(r.labeled_episodes, 0u);
}

TEST(Evaluate, RejectsUnsortedEvents) {
  EXPECT_THROW(evaluate({onset(2000), onset(1000)}, labels_of({})), UnsortedEvents);
}

TEST(Evaluate, PooledAndMacro) {
  const EvalReport a = evaluate({onset(1500)}, labels_of({{SegmentKind::drowsy, 1000, 3000}}));
  const EvalReport b = evaluate({onset(1500)}, labels_of({{SegmentKind::drowsy, 1000, 3000},
                                                         {SegmentKind::drowsy, 5000, 6000},
                                                         {SegmentKind::drowsy, 8000, 9000}}));
  const CorpusReport c = pool_reports({a, b});
  EXPECT_EQ(c.pooled.labeled_episodes, 4u);
  EXPECT_EQ(c.pooled.matched_episodes, 2u);
  EXPECT_DOUBLE_EQ(c.pooled.drowsy_recall, 0.5);
  EXPECT_DOUBLE_EQ(c.macro_recall, (1.0 + 1.0 / 3.0) / 2.0);
  EXPECT_EQ(c.pooled.duration_ms, 120000);
  const std::string j = corpus_report_to_json(c);
  EXPECT_NE(j.find("\"macro_recall\""), std::string::npos);
  EXPECT_NE(report_table(c).find("recall"), std::string::npos);
}

TEST(ScenarioJson, RoundTrip) {
  Scenario sc = noise_free(8000, {{SegmentKind::blink, 500, 620, {}},
                                  {SegmentKind::drowsy, 1000, 3000, 0.05},
                                  {SegmentKind::occlusion, 4000, 4400, {}},
                                  {SegmentKind::open, 5000, 7000, 0.4}});
  sc.noise_sigma = 0.02;
  sc.width = 1280;
  sc.height = 720;
  EXPECT_EQ(scenario_from_json(scenario_to_json(sc)), sc);
  const Scenario minimal = scenario_from_json(
      R"({"duration_ms":4000,"segments":[{"kind":"blink","start_ms":100,"end_ms":200}]})");
  EXPECT_EQ(minimal.fps, 25.0);
  EXPECT_EQ(minimal.noise_sigma, 0.01);
  ASSERT_EQ(minimal.segments.size(), 1u);
  EXPECT_EQ(minimal.segments[0].kind, SegmentKind::blink);
}

TEST(ScenarioJson, StrictFields) {
  EXPECT_THROW(scenario_from_json(R"({"duration_ms":4000,"speed":2})"), InvalidScenario);
  EXPECT_THROW(scenario_from_json(R"({"segments":[{"kind":"nap","start_ms":1,"end_ms":2}]})"), InvalidScenario);
  EXPECT_THROW(scenario_from_json(R"({"segments":[{"kind":"blink","start_ms":1}]})"), InvalidScenario);
  EXPECT_THROW(scenario_from_json("[1,2]"), InvalidScenario);
  EXPECT_THROW(scenario_from_json("{"), InvalidScenario);
}

TEST(LabelsJson, RoundTrip) {
  const GeneratedSession g = gen_scenario(default_scenario());
  EXPECT_EQ(labels_from_json(labels_to_json(g.labels)), g.labels);
  EXPECT_EQ(g.labels.episodes.size(), 5u);
  EXPECT_THROW(labels_from_json(R"({"fps":25,"duration_ms":1,"frames":1,"episodes":[],"x":1})"), InvalidScenario);
  EXPECT_THROW(labels_from_json(R"({"fps":25})"), InvalidScenario);
}

TEST(CorpusScenario, Shape) {
  const Scenario sc = make_corpus_scenario(1);
  EXPECT_EQ(sc.duration_ms, 300000);
  EXPECT_NO_THROW(sc.validate());
  std::size_t drowsy = 0, occl = 0, blinks = 0;
  for (const auto& s : sc.segments) {
    drowsy += s.kind == SegmentKind::drowsy;
    occl += s.kind == SegmentKind::occlusion;
    blinks += s.kind == SegmentKind::blink;
    if (s.kind == SegmentKind::drowsy) EXPECT_GE(s.end_ms - s.start_ms, 1500);
  }
  EXPECT_EQ(drowsy, 5u);
  EXPECT_EQ(occl, 5u);
  EXPECT_GT(blinks, 40u);
  EXPECT_THROW(make_corpus_scenario(1, 20000, 1), InvalidScenario);
}

}  // namespace
}  // namespace drowsy
