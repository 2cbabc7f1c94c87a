#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "drowsy/errors.hpp"
#include "drowsy/mesh.hpp"

namespace drowsy {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

/// Six eye landmarks, one per row, in p1..p6 order.
template <typename Scalar>
using EyePoints = Eigen::Matrix<Scalar, 6, 2>;

inline constexpr double kDefaultEyeWidthEpsilon = 1e-9;

template <typename Derived1, typename Derived2>
typename Derived1::Scalar dist(const Eigen::MatrixBase<Derived1>& p, const Eigen::MatrixBase<Derived2>& q) {
  return (p - q).norm();
}

/// Eye Aspect Ratio: (|p2 p6| + |p3 p5|) / (2 |p1 p4|).
///
/// Invariant under translation, rotation and uniform scaling of all six points.
/// Throws DegenerateEye when |p1 p4| <= eps; a collapsed horizontal width
/// means corrupt landmarks, since closure only shrinks the vertical pairs.
template <typename Scalar>
Scalar eye_aspect_ratio(const EyePoints<Scalar>& eye, Scalar eps = Scalar(kDefaultEyeWidthEpsilon)) {
  const Scalar width = dist(eye.row(0), eye.row(3));
  if (!(width > eps)) {
    throw DegenerateEye("horizontal eye width below epsilon");
  }
  const Scalar outer_pair = dist(eye.row(1), eye.row(5));
  const Scalar inner_pair = dist(eye.row(2), eye.row(4));
  return (outer_pair + inner_pair) / (Scalar(2) * width);
}

/// Per-frame EAR signal. Either both eyes and their mean are present
/// (valid) or none are.
struct EarSample {
  std::int64_t ts_ms = 0;
  std::optional<double> left_ear;
  std::optional<double> right_ear;
  std::optional<double> mean_ear;
  bool valid = false;

  static EarSample invalid(std::int64_t ts_ms) { return EarSample{ts_ms, {}, {}, {}, false}; }
  static EarSample from_eyes(std::int64_t ts_ms, double left, double right) {
    return EarSample{ts_ms, left, right, (left + right) / 2.0, true};
  }

  friend bool operator==(const EarSample&, const EarSample&) = default;
};

/// Gathers one eye's six landmarks in pixel space.
EyePoints<double> eye_pixels(const MeshFrame& frame, const std::array<int, 6>& indices);

/// EAR for both eyes of a frame. No face or a degenerate eye yields an
/// invalid sample rather than an error.
EarSample frame_ear(const MeshFrame& frame, const EyeIndexMap& eyes = default_eye_indices(),
                    double eps = kDefaultEyeWidthEpsilon);

struct SmoothedEar {
  std::optional<double> value;
  bool stale = false;  // value carried over from an earlier valid sample
};

/// Exponential moving average with `alpha` as the weight on history:
/// smoothed = alpha * prev + (1 - alpha) * mean_ear. alpha = 0 returns the
/// raw value; an absent prev seeds from the sample. Invalid samples pass
/// prev through and mark it stale.
SmoothedEar smooth_ear(std::optional<double> prev_smoothed, const EarSample& sample, double alpha);

}  // namespace drowsy
