#include "drowsy/ear.hpp"

#include <cmath>

namespace drowsy {

EyePoints<double> eye_pixels(const MeshFrame& frame, const std::array<int, 6>& indices) {
  EyePoints<double> eye;
  for (int i = 0; i < 6; ++i) {
    eye.row(i) = to_pixels(frame, indices[static_cast<std::size_t>(i)]).transpose();
  }
  return eye;
}

EarSample frame_ear(const MeshFrame& frame, const EyeIndexMap& eyes, double eps) {
  if (!frame.face_present()) {
    return EarSample::invalid(frame.ts_ms());
  }
  try {
    const double left = eye_aspect_ratio(eye_pixels(frame, eyes.left), eps);
    const double right = eye_aspect_ratio(eye_pixels(frame, eyes.right), eps);
    if (!std::isfinite(left) || !std::isfinite(right)) {
      return EarSample::invalid(frame.ts_ms());
    }
    return EarSample::from_eyes(frame.ts_ms(), left, right);
  } catch (const DegenerateEye&) {
    return EarSample::invalid(frame.ts_ms());
  }
}

SmoothedEar smooth_ear(std::optional<double> prev_smoothed, const EarSample& sample, double alpha) {
  if (!sample.valid) {
    return {prev_smoothed, prev_smoothed.has_value()};
  }
  const double raw = *sample.mean_ear;
  if (alpha <= 0.0 || !prev_smoothed) {
    return {raw, false};
  }
  return {alpha * *prev_smoothed + (1.0 - alpha) * raw, false};
}

}  // namespace drowsy
