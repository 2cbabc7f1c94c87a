#include <ostream>

#include "drowsy/errors.hpp"
#include "drowsy/events.hpp"
#include "drowsy/pipeline.hpp"

namespace drowsy {

void JsonLineSink::deliver(const EyeEvent& event) {
  event_to_json(event, line_);
  line_ += '\n';
  out_.write(line_.data(), static_cast<std::streamsize>(line_.size()));
  // Live consumers read events as they happen.
  out_.flush();
}

void JsonLineSink::flush() { out_.flush(); }

SinkDispatcher::SinkDispatcher(std::vector<EventSink*> sinks, std::size_t queue_capacity)
    : sinks_(std::move(sinks)), capacity_(queue_capacity) {
  if (capacity_ == 0) return;
  for (EventSink* sink : sinks_) {
    auto lane = std::make_unique<Lane>();
    lane->sink = sink;
    Lane& ref = *lane;
    lane->worker = std::thread([&ref] { service(ref); });
    lanes_.push_back(std::move(lane));
  }
}

SinkDispatcher::~SinkDispatcher() {
  try {
    close();
  } catch (...) {
  }
}

void SinkDispatcher::service(Lane& lane) {
  std::unique_lock lock(lane.mu);
  for (;;) {
    lane.cv.wait(lock, [&] { return lane.closing || !lane.queue.empty(); });
    if (lane.queue.empty()) break;
    EyeEvent event = lane.queue.front();
    lane.queue.pop_front();
    lock.unlock();
    try {
      lane.sink->deliver(event);
    } catch (...) {
      lock.lock();
      if (!lane.failure) lane.failure = std::current_exception();
      lane.queue.clear();
      break;
    }
    lock.lock();
  }
  lock.unlock();
  try {
    lane.sink->flush();
  } catch (...) {
    std::lock_guard guard(lane.mu);
    if (!lane.failure) lane.failure = std::current_exception();
  }
}

void SinkDispatcher::publish(const EyeEvent& event) {
  if (capacity_ == 0) {
    for (EventSink* sink : sinks_) sink->deliver(event);
    return;
  }
  for (auto& lane : lanes_) {
    {
      std::lock_guard guard(lane->mu);
      if (lane->failure) std::rethrow_exception(lane->failure);
      if (lane->queue.size() >= capacity_) {
        throw SinkBackpressure("event sink queue full (" + std::to_string(capacity_) + " events)");
      }
      lane->queue.push_back(event);
    }
    lane->cv.notify_one();
  }
}

void SinkDispatcher::close() {
  if (closed_) return;
  closed_ = true;
  if (capacity_ == 0) {
    for (EventSink* sink : sinks_) sink->flush();
    return;
  }
  for (auto& lane : lanes_) {
    {
      std::lock_guard guard(lane->mu);
      lane->closing = true;
    }
    lane->cv.notify_one();
  }
  std::exception_ptr first;
  for (auto& lane : lanes_) {
    if (lane->worker.joinable()) lane->worker.join();
    if (lane->failure && !first) first = lane->failure;
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace drowsy
