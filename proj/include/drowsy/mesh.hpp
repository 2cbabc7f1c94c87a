#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace drowsy {

inline constexpr int kLandmarkCount = 468;

/// Row-major N x 3 block of normalized (x, y, z) landmarks.
using LandmarkMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// One timestamped face-mesh frame. Immutable once built; the factories
/// enforce the invariants (468 landmarks iff a face is present, positive
/// image dimensions).
class MeshFrame {
 public:
  static MeshFrame with_face(std::int64_t ts_ms, int width, int height, LandmarkMatrix landmarks);
  static MeshFrame without_face(std::int64_t ts_ms, int width, int height);

  std::int64_t ts_ms() const { return ts_ms_; }
  int width() const { return width_; }
  int height() const { return height_; }
  bool face_present() const { return face_present_; }
  const LandmarkMatrix& landmarks() const { return landmarks_; }

  friend bool operator==(const MeshFrame& a, const MeshFrame& b);

 private:
  MeshFrame() = default;

  std::int64_t ts_ms_ = 0;
  int width_ = 0;
  int height_ = 0;
  bool face_present_ = false;
  LandmarkMatrix landmarks_;
};

/// Six landmark indices per eye, ordered p1..p6:
/// p1 outer corner, p4 inner corner, (p2, p6) and (p3, p5) upper/lower lid pairs.
struct EyeIndexMap {
  std::array<int, 6> left;
  std::array<int, 6> right;

  /// Throws SchemaError unless all 12 indices are distinct and in [0, 468).
  void validate() const;
};

/// Conventional 6-point eye contours of the 468-point mesh.
EyeIndexMap default_eye_indices();

/// Parses one wire-format record. Throws ParseError or SchemaError.
MeshFrame parse_frame(std::string_view line);

std::string serialize_frame(const MeshFrame& frame);
void serialize_frame(const MeshFrame& frame, std::string& out);

/// Landmark `index` in pixel units (x * width, y * height).
Eigen::Vector2d to_pixels(const MeshFrame& frame, int index);

/// Rejects non-increasing timestamps within a session.
class TimestampGuard {
 public:
  /// Throws OutOfOrder when ts_ms <= the previously accepted timestamp.
  void check(std::int64_t ts_ms);

 private:
  bool seen_ = false;
  std::int64_t last_ = 0;
};

/// Reads a whole session strictly: the first bad record or out-of-order
/// timestamp throws, with the line number in the message. Blank lines are skipped.
std::vector<MeshFrame> read_session(std::istream& in);
void write_session(std::ostream& out, const std::vector<MeshFrame>& frames);

}  // namespace drowsy
