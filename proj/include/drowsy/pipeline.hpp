#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <thread>
#include <vector>

#include "drowsy/detector.hpp"
#include "drowsy/mesh.hpp"

namespace drowsy {

// ---------------------------------------------------------------------------
// Sources

enum class SourceKind { file, stdin_pipe, tcp };
enum class Pacing { realtime, fast };

struct SourceSpec {
  SourceKind kind = SourceKind::stdin_pipe;
  std::string location;  // file path, or HOST:PORT for tcp
  Pacing pacing = Pacing::realtime;

  /// Parses `stdin`, `file:PATH` or `tcp:HOST:PORT`. Throws ConfigError.
  static SourceSpec parse(std::string_view text);
};

/// Line-oriented frame transport.
class LineSource {
 public:
  virtual ~LineSource() = default;
  /// Next line without its terminator; false at end of stream.
  virtual bool next_line(std::string& line) = 0;
  /// Like next_line, but the view may point into source-owned storage and
  /// stays valid until the next call.
  virtual bool next_view(std::string_view& line) {
    if (!next_line(buffer_)) return false;
    line = buffer_;
    return true;
  }

 private:
  std::string buffer_;
};

class StreamSource : public LineSource {
 public:
  explicit StreamSource(std::istream& in) : in_(in) {}
  bool next_line(std::string& line) override;

 private:
  std::istream& in_;
};

/// Throws SourceUnavailable when the file cannot be opened.
class FileSource : public LineSource {
 public:
  explicit FileSource(const std::string& path);
  ~FileSource() override;
  bool next_line(std::string& line) override;

 private:
  std::unique_ptr<std::istream> in_;
};

/// Replays lines held in memory; the span must outlive the source.
class MemorySource : public LineSource {
 public:
  explicit MemorySource(std::span<const std::string> lines) : lines_(lines) {}
  bool next_line(std::string& line) override;
  bool next_view(std::string_view& line) override;

 private:
  std::span<const std::string> lines_;
  std::size_t next_ = 0;
};

/// Listens on HOST:PORT and reads one connection; connection close ends the
/// stream. Binding happens in the constructor, so port 0 picks a free port.
class TcpSource : public LineSource {
 public:
  explicit TcpSource(const std::string& address);
  ~TcpSource() override;
  TcpSource(const TcpSource&) = delete;
  TcpSource& operator=(const TcpSource&) = delete;

  bool next_line(std::string& line) override;
  std::uint16_t port() const { return port_; }

 private:
  int listen_fd_ = -1;
  int conn_fd_ = -1;
  bool eof_ = false;
  std::uint16_t port_ = 0;
  std::string buffer_;
  std::size_t consumed_ = 0;
};

std::unique_ptr<LineSource> open_source(const SourceSpec& spec, std::istream& stdin_stream);

// ---------------------------------------------------------------------------
// Sinks

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void deliver(const EyeEvent& event) = 0;
  virtual void flush() {}
};

/// Writes one event record per line.
class JsonLineSink : public EventSink {
 public:
  explicit JsonLineSink(std::ostream& out) : out_(out) {}
  void deliver(const EyeEvent& event) override;
  void flush() override;

 private:
  std::ostream& out_;
  std::string line_;
};

class CollectingSink : public EventSink {
 public:
  void deliver(const EyeEvent& event) override { events.push_back(event); }
  std::vector<EyeEvent> events;
};

/// Fans events out to sinks in emission order. With a non-zero capacity each
/// sink is serviced by its own thread behind a bounded queue, and publishing
/// into a full queue throws SinkBackpressure instead of blocking.
class SinkDispatcher {
 public:
  SinkDispatcher(std::vector<EventSink*> sinks, std::size_t queue_capacity);
  ~SinkDispatcher();
  SinkDispatcher(const SinkDispatcher&) = delete;
  SinkDispatcher& operator=(const SinkDispatcher&) = delete;

  void publish(const EyeEvent& event);
  /// Drains every queue, joins workers, and rethrows the first sink failure.
  void close();

 private:
  struct Lane {
    EventSink* sink = nullptr;
    std::mutex mu;
    std::condition_variable cv;
    std::deque<EyeEvent> queue;
    bool closing = false;
    std::exception_ptr failure;
    std::thread worker;
  };

  static void service(Lane& lane);

  std::vector<EventSink*> sinks_;
  std::size_t capacity_;
  std::vector<std::unique_ptr<Lane>> lanes_;
  bool closed_ = false;
};

// ---------------------------------------------------------------------------
// Alarm

enum class AlertAction { bell, exec, none };

struct AlertPolicy {
  std::vector<EventKind> on_kinds{EventKind::drowsy_onset, EventKind::low_blink_rate};
  AlertAction action = AlertAction::bell;
  std::string command;  // exec only

  bool triggers(EventKind kind) const;
  /// Throws ConfigError when exec has no command.
  void validate() const;
  /// Parses `bell`, `none` or `exec:CMD`.
  static AlertPolicy parse(std::string_view text);
};

/// Runs the configured action for triggering events. exec spawns
/// `/bin/sh -c CMD` with the event record on its standard input and does not
/// wait for it; children are reaped opportunistically and on destruction.
class Alarm {
 public:
  explicit Alarm(AlertPolicy policy, std::ostream* bell_out = nullptr);
  ~Alarm();
  Alarm(const Alarm&) = delete;
  Alarm& operator=(const Alarm&) = delete;

  /// True when the event triggered the action.
  bool maybe_fire(const EyeEvent& event);
  std::size_t fired() const { return fired_; }
  /// Blocks until every spawned command has exited.
  void wait_all();

 private:
  void spawn(const EyeEvent& event);
  void reap(bool block);

  AlertPolicy policy_;
  std::ostream* bell_out_;
  std::size_t fired_ = 0;
  std::vector<pid_t> children_;
};

// ---------------------------------------------------------------------------
// Pipeline

struct LatencyStats {
  std::size_t frames = 0;  // zero marks an empty run
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;

  bool empty() const { return frames == 0; }
};

struct RunSummary {
  std::string status = "ok";
  std::size_t lines_read = 0;
  std::size_t frames_processed = 0;
  std::size_t valid_frames = 0;
  std::size_t invalid_frames = 0;  // frames without a usable EAR
  std::size_t bad_lines = 0;       // skipped malformed records
  std::size_t alarms_fired = 0;
  std::map<EventKind, std::size_t> events_by_kind;
  std::vector<double> frame_cost_ms;  // per frame, pacing sleeps excluded
  double wall_seconds = 0.0;

  std::size_t total_events() const;
};

/// Per-frame processing cost percentiles (nearest rank).
LatencyStats measure_latency(const RunSummary& summary);

std::string summary_to_json(const RunSummary& summary);

struct PipelineOptions {
  std::size_t bad_line_budget = 10;
  std::size_t sink_queue_capacity = 1024;  // 0 delivers synchronously
  EyeIndexMap eyes = default_eye_indices();
};

/// parse -> frame_ear -> detector_step -> sinks -> alarm, per frame, then
/// finalize at end of stream. Event timestamps are session timestamps.
///
/// Malformed records are skipped and counted until the bad-line budget is
/// exceeded, which throws ParseError with the line number. A non-increasing
/// timestamp throws OutOfOrder.
RunSummary run_pipeline(LineSource& source, Pacing pacing, const DetectorConfig& config, Alarm& alarm,
                        std::span<EventSink* const> sinks, const PipelineOptions& options = {});

RunSummary run_pipeline(const SourceSpec& source, const DetectorConfig& config, const AlertPolicy& policy,
                        std::span<EventSink* const> sinks, const PipelineOptions& options = {});

}  // namespace drowsy
