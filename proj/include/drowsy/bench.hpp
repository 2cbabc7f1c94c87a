#pragma once

#include <cstdint>
#include <string>

#include "drowsy/detector.hpp"
#include "drowsy/pipeline.hpp"

namespace drowsy {

struct BenchResult {
  std::size_t frames = 0;
  double seconds = 0.0;          // timed parse -> EAR -> detector loop only
  double frames_per_second = 0.0;  // zero for an empty run
  LatencyStats latency;
  std::size_t events = 0;
};

/// Generates `frames` serialized frames in memory (blinks plus periodic
/// drowsy episodes, default noise) and times the full pipeline over them.
BenchResult run_bench(std::size_t frames, std::uint64_t seed = 7, const DetectorConfig& config = {});

std::string bench_to_json(const BenchResult& result);

}  // namespace drowsy
