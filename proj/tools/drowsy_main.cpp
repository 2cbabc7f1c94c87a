// drowsy: command-line front end for the drowsiness-detection engine.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage or configuration error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drowsy/bench.hpp"
#include "drowsy/config_file.hpp"
#include "drowsy/errors.hpp"
#include "drowsy/eval.hpp"
#include "drowsy/events.hpp"
#include "drowsy/pipeline.hpp"
#include "drowsy/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Detector flags shared by every subcommand that runs the detector.
/// Precedence: flag > config file > default.
struct DetectorFlags {
  std::string config_path;
  std::optional<double> close_threshold;
  std::optional<double> open_threshold;
  std::optional<int> consec_frames;
  bool print_config = false;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "Config file of key = value records");
    cmd.add_option("--ear-threshold", close_threshold, "EAR below which the eye counts as closed");
    cmd.add_option("--ear-open-threshold", open_threshold, "EAR above which a closed eye counts as reopened");
    cmd.add_option("--consec-frames", consec_frames, "Closed frames that raise a drowsy onset");
    cmd.add_flag("--print-config", print_config, "Print the effective configuration and exit");
  }

  drowsy::DetectorConfig resolve() const {
    drowsy::DetectorConfig cfg;
    if (!config_path.empty()) cfg = drowsy::load_config_file(config_path, cfg);
    if (close_threshold) cfg.ear_close_threshold = *close_threshold;
    if (open_threshold) cfg.ear_open_threshold = *open_threshold;
    if (consec_frames) cfg.consec_frames = *consec_frames;
    cfg.validate();
    return cfg;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw drowsy::ConfigError("cannot read \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_effective(const drowsy::DetectorConfig& cfg, const std::string& source, const std::string& alert) {
  std::cout << drowsy::config_to_text(cfg);
  if (!source.empty()) std::cout << "# source = " << source << '\n';
  if (!alert.empty()) std::cout << "# alert = " << alert << '\n';
}

int stream_events(const drowsy::SourceSpec& spec, const drowsy::DetectorConfig& cfg,
                  const drowsy::AlertPolicy& policy, std::size_t bad_line_budget) {
  drowsy::JsonLineSink sink(std::cout);
  drowsy::EventSink* sinks[] = {&sink};
  drowsy::PipelineOptions options;
  options.bad_line_budget = bad_line_budget;
  const drowsy::RunSummary summary = drowsy::run_pipeline(spec, cfg, policy, sinks, options);
  std::cerr << drowsy::summary_to_json(summary) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Real-time drowsiness detection over face-mesh landmark streams"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run the detector on a live or recorded stream");
  DetectorFlags run_flags;
  run_flags.attach(*run);
  std::string run_source = "stdin";
  std::string run_alert = "bell";
  bool run_fast = false;
  std::size_t run_budget = 10;
  run->add_option("--source", run_source, "stdin, file:PATH or tcp:HOST:PORT");
  run->add_option("--alert", run_alert, "bell, exec:CMD or none");
  run->add_flag("--fast", run_fast, "Do not pace frames by their timestamps");
  run->add_option("--bad-line-budget", run_budget, "Malformed lines skipped before aborting");

  // replay
  auto* replay = app.add_subcommand("replay", "Replay a recorded session file");
  DetectorFlags replay_flags;
  replay_flags.attach(*replay);
  std::string replay_input;
  std::string replay_alert = "none";
  bool replay_fast = false;
  std::size_t replay_budget = 10;
  replay->add_option("input", replay_input, "Session file")->required();
  replay->add_option("--alert", replay_alert, "bell, exec:CMD or none");
  replay->add_flag("--fast", replay_fast, "Do not pace frames by their timestamps");
  replay->add_option("--bad-line-budget", replay_budget, "Malformed lines skipped before aborting");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a labeled synthetic session");
  std::string gen_scenario_path;
  std::string gen_out;
  std::string gen_labels;
  std::optional<std::uint64_t> gen_seed;
  std::optional<double> gen_noise;
  gen->add_option("scenario", gen_scenario_path, "Scenario file (default: built-in noise-free scenario)");
  gen->add_option("--out", gen_out, "Session output path")->required();
  gen->add_option("--labels", gen_labels, "Labels output path (default: OUT.labels.json)");
  gen->add_option("--seed", gen_seed, "Override the scenario seed");
  gen->add_option("--noise-sigma", gen_noise, "Override the scenario noise (EAR units)");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate detector events against session labels");
  DetectorFlags eval_flags;
  eval_flags.attach(*eval);
  std::vector<std::string> eval_inputs;
  std::string eval_report;
  std::int64_t eval_tolerance = drowsy::kDefaultMatchToleranceMs;
  eval->add_option("inputs", eval_inputs, "SESSION LABELS [SESSION LABELS ...]")->required();
  eval->add_option("--report", eval_report, "Write the report record to this path");
  eval->add_option("--tolerance-ms", eval_tolerance, "Match tolerance past episode end");

  // bench
  auto* bench = app.add_subcommand("bench", "Measure throughput of parse -> EAR -> detector");
  DetectorFlags bench_flags;
  bench_flags.attach(*bench);
  std::size_t bench_frames = 25000;
  std::uint64_t bench_seed = 7;
  bench->add_option("--frames", bench_frames, "Frames to generate and process");
  bench->add_option("--seed", bench_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run->parsed() || replay->parsed()) {
      const bool is_run = run->parsed();
      const DetectorFlags& flags = is_run ? run_flags : replay_flags;
      drowsy::SourceSpec spec = is_run ? drowsy::SourceSpec::parse(run_source)
                                       : drowsy::SourceSpec{drowsy::SourceKind::file, replay_input, {}};
      spec.pacing = (is_run ? run_fast : replay_fast) ? drowsy::Pacing::fast : drowsy::Pacing::realtime;
      const std::string& alert = is_run ? run_alert : replay_alert;
      const drowsy::AlertPolicy policy = drowsy::AlertPolicy::parse(alert);
      const drowsy::DetectorConfig cfg = flags.resolve();
      if (flags.print_config) {
        print_effective(cfg, is_run ? run_source : "file:" + replay_input, alert);
        return kExitOk;
      }
      return stream_events(spec, cfg, policy, is_run ? run_budget : replay_budget);
    }

    if (gen->parsed()) {
      drowsy::Scenario sc =
          gen_scenario_path.empty() ? drowsy::default_scenario() : drowsy::scenario_from_json(read_file(gen_scenario_path));
      if (gen_seed) sc.seed = *gen_seed;
      if (gen_noise) sc.noise_sigma = *gen_noise;
      const std::string labels_path = gen_labels.empty() ? gen_out + ".labels.json" : gen_labels;
      std::ofstream out(gen_out, std::ios::binary);
      if (!out) throw drowsy::ConfigError("cannot write \"" + gen_out + "\"");
      std::string line;
      const drowsy::SessionLabels labels = drowsy::generate_frames(sc, [&](drowsy::MeshFrame f, auto) {
        drowsy::serialize_frame(f, line);
        line += '\n';
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
      });
      out.close();
      std::ofstream lab(labels_path);
      if (!lab) throw drowsy::ConfigError("cannot write \"" + labels_path + "\"");
      lab << drowsy::labels_to_json(labels) << '\n';
      if (!out || !lab) throw drowsy::Error("write failed");
      std::cout << "{\"frames\":" << labels.frames << ",\"episodes\":" << labels.episodes.size()
                << ",\"session\":\"" << gen_out << "\",\"labels\":\"" << labels_path << "\"}\n";
      return kExitOk;
    }

    if (eval->parsed()) {
      const drowsy::DetectorConfig cfg = eval_flags.resolve();
      if (eval_flags.print_config) {
        print_effective(cfg, "", "");
        return kExitOk;
      }
      if (eval_inputs.size() % 2 != 0) {
        throw drowsy::ConfigError("eval takes SESSION LABELS pairs");
      }
      std::vector<drowsy::EvalReport> reports;
      for (std::size_t i = 0; i < eval_inputs.size(); i += 2) {
        const drowsy::SessionLabels labels = drowsy::labels_from_json(read_file(eval_inputs[i + 1]));
        drowsy::CollectingSink sink;
        drowsy::EventSink* sinks[] = {&sink};
        drowsy::PipelineOptions options;
        options.bad_line_budget = 0;
        drowsy::SourceSpec spec{drowsy::SourceKind::file, eval_inputs[i], drowsy::Pacing::fast};
        try {
          drowsy::run_pipeline(spec, cfg, drowsy::AlertPolicy{{}, drowsy::AlertAction::none, {}}, sinks, options);
        } catch (const drowsy::ParseError& e) {
          throw drowsy::ConfigError(eval_inputs[i] + ": " + e.what());
        } catch (const drowsy::OutOfOrder& e) {
          throw drowsy::ConfigError(eval_inputs[i] + ": " + e.what());
        }
        reports.push_back(drowsy::evaluate(sink.events, labels, eval_tolerance));
      }
      const drowsy::CorpusReport report = drowsy::pool_reports(std::move(reports));
      if (!eval_report.empty()) {
        std::ofstream out(eval_report);
        if (!out) throw drowsy::ConfigError("cannot write \"" + eval_report + "\"");
        out << drowsy::corpus_report_to_json(report) << '\n';
      }
      std::cout << drowsy::report_table(report);
      return kExitOk;
    }

    if (bench->parsed()) {
      const drowsy::DetectorConfig cfg = bench_flags.resolve();
      if (bench_flags.print_config) {
        print_effective(cfg, "", "");
        return kExitOk;
      }
      const drowsy::BenchResult result = drowsy::run_bench(bench_frames, bench_seed, cfg);
      std::cout << drowsy::bench_to_json(result) << '\n';
      return kExitOk;
    }
  } catch (const drowsy::ConfigError& e) {
    std::cerr << "drowsy: " << e.what() << '\n';
    return kExitUsage;
  } catch (const drowsy::InvalidScenario& e) {
    std::cerr << "drowsy: " << e.what() << '\n';
    return kExitUsage;
  } catch (const drowsy::SourceUnavailable& e) {
    std::cerr << "drowsy: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "drowsy: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
