#include "drowsy/mesh.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_set>

#include "drowsy/errors.hpp"

namespace drowsy {

MeshFrame MeshFrame::with_face(std::int64_t ts_ms, int width, int height, LandmarkMatrix landmarks) {
  if (width <= 0 || height <= 0) {
    throw SchemaError("image dimensions must be positive");
  }
  if (landmarks.rows() != kLandmarkCount) {
    throw SchemaError("face frame needs " + std::to_string(kLandmarkCount) + " landmarks, got " +
                      std::to_string(landmarks.rows()));
  }
  if (!landmarks.allFinite()) {
    throw SchemaError("landmark coordinates must be finite");
  }
  MeshFrame f;
  f.ts_ms_ = ts_ms;
  f.width_ = width;
  f.height_ = height;
  f.face_present_ = true;
  f.landmarks_ = std::move(landmarks);
  return f;
}

MeshFrame MeshFrame::without_face(std::int64_t ts_ms, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw SchemaError("image dimensions must be positive");
  }
  MeshFrame f;
  f.ts_ms_ = ts_ms;
  f.width_ = width;
  f.height_ = height;
  f.face_present_ = false;
  f.landmarks_.resize(0, 3);
  return f;
}

bool operator==(const MeshFrame& a, const MeshFrame& b) {
  return a.ts_ms_ == b.ts_ms_ && a.width_ == b.width_ && a.height_ == b.height_ &&
         a.face_present_ == b.face_present_ && a.landmarks_.rows() == b.landmarks_.rows() &&
         a.landmarks_ == b.landmarks_;
}

void EyeIndexMap::validate() const {
  std::unordered_set<int> seen;
  for (const auto* eye : {&left, &right}) {
    for (int idx : *eye) {
      if (idx < 0 || idx >= kLandmarkCount) {
        throw SchemaError("eye landmark index " + std::to_string(idx) + " outside [0, 468)");
      }
      if (!seen.insert(idx).second) {
        throw SchemaError("eye landmark index " + std::to_string(idx) + " used twice");
      }
    }
  }
}

EyeIndexMap default_eye_indices() {
  return EyeIndexMap{{33, 160, 158, 133, 153, 144}, {362, 385, 387, 263, 373, 380}};
}

Eigen::Vector2d to_pixels(const MeshFrame& frame, int index) {
  if (!frame.face_present()) {
    throw NoFace("frame has no face");
  }
  if (index < 0 || index >= kLandmarkCount) {
    throw IndexOutOfRange("landmark index " + std::to_string(index) + " outside [0, 468)");
  }
  const auto& lm = frame.landmarks();
  return {lm(index, 0) * frame.width(), lm(index, 1) * frame.height()};
}

namespace {

// Exact powers of ten representable as doubles.
constexpr double kPow10[] = {1e0,  1e1,  1e2,  1e3,  1e4,  1e5,  1e6,  1e7,  1e8,  1e9,  1e10, 1e11,
                             1e12, 1e13, 1e14, 1e15, 1e16, 1e17, 1e18, 1e19, 1e20, 1e21, 1e22};

struct NumberToken {
  const char* begin;
  const char* end;
  bool negative = false;
  bool integral = true;
  bool overflow = false;  // more than 19 significant digits
  std::uint64_t mantissa = 0;
  int exp10 = 0;
};

bool is_digit(char c) { return static_cast<unsigned>(c - '0') < 10u; }

// Plain JSON decimal with at most 19 significant digits whose value is exact
// under Clinger's fast path. Returns the position past the number, or nullptr
// when the caller must use the general scanner.
inline const char* fast_decimal(const char* p, const char* end, double& out) {
  bool neg = false;
  if (p < end && *p == '-') {
    neg = true;
    ++p;
  }
  if (p >= end || !is_digit(*p)) return nullptr;
  std::uint64_t m = 0;
  int digits = 0;
  if (*p == '0') {
    ++p;
    if (p < end && is_digit(*p)) return nullptr;
  } else {
    do {
      m = m * 10 + static_cast<unsigned>(*p - '0');
      ++digits;
      ++p;
    } while (p < end && is_digit(*p));
  }
  int exp10 = 0;
  if (p < end && *p == '.') {
    const char* frac = ++p;
    while (p < end && is_digit(*p)) {
      m = m * 10 + static_cast<unsigned>(*p - '0');
      ++p;
    }
    const auto nfrac = static_cast<int>(p - frac);
    if (nfrac == 0) return nullptr;
    digits += nfrac;
    exp10 = -nfrac;
  }
  if (p < end && (*p == 'e' || *p == 'E')) {
    ++p;
    bool eneg = false;
    if (p < end && (*p == '+' || *p == '-')) {
      eneg = *p == '-';
      ++p;
    }
    if (p >= end || !is_digit(*p)) return nullptr;
    int e = 0;
    do {
      e = e * 10 + (*p - '0');
      ++p;
    } while (p < end && is_digit(*p) && e < 1000);
    if (p < end && is_digit(*p)) return nullptr;
    exp10 += eneg ? -e : e;
  }
  if (digits > 19 || m > (std::uint64_t{1} << 53) || exp10 < -22 || exp10 > 22) return nullptr;
  double v = static_cast<double>(m);
  v = exp10 < 0 ? v / kPow10[-exp10] : v * kPow10[exp10];
  out = neg ? -v : v;
  return p;
}

// Strict single-record scanner for the session wire format.
class RecordParser {
 public:
  explicit RecordParser(std::string_view s) : p_(s.data()), end_(s.data() + s.size()) {}

  MeshFrame parse() {
    enum : unsigned { kTs = 1, kW = 2, kH = 4, kFace = 8, kLm = 16, kAll = 31 };
    unsigned seen = 0;
    std::int64_t ts = 0;
    std::int64_t w = 0;
    std::int64_t h = 0;
    bool face = false;
    LandmarkMatrix lm(kLandmarkCount, 3);
    Eigen::Index rows = 0;

    skip_ws();
    expect('{');
    skip_ws();
    if (peek() == '}') {
      fail("empty record");
    }
    for (;;) {
      skip_ws();
      const std::string_view key = parse_key();
      skip_ws();
      expect(':');
      skip_ws();
      unsigned bit = 0;
      if (key == "ts_ms") {
        bit = kTs;
        ts = parse_integer_field("ts_ms");
      } else if (key == "w") {
        bit = kW;
        w = parse_integer_field("w");
      } else if (key == "h") {
        bit = kH;
        h = parse_integer_field("h");
      } else if (key == "face") {
        bit = kFace;
        face = parse_bool_field("face");
      } else if (key == "lm") {
        bit = kLm;
        rows = parse_landmarks(lm);
      } else {
        skip_value();
        throw SchemaError("unknown field \"" + std::string(key) + "\"");
      }
      if (seen & bit) {
        fail("duplicate field \"" + std::string(key) + "\"");
      }
      seen |= bit;
      skip_ws();
      if (peek() == ',') {
        ++p_;
        continue;
      }
      expect('}');
      break;
    }
    skip_ws();
    if (p_ != end_) {
      fail("trailing characters after record");
    }
    if (seen != kAll) {
      static constexpr const char* kNames[] = {"ts_ms", "w", "h", "face", "lm"};
      for (unsigned i = 0; i < 5; ++i) {
        if (!(seen & (1u << i))) {
          fail(std::string("missing field \"") + kNames[i] + "\"");
        }
      }
    }
    if (w <= 0 || h <= 0 || w > std::numeric_limits<int>::max() || h > std::numeric_limits<int>::max()) {
      throw SchemaError("image dimensions must be positive integers");
    }
    if (!face) {
      if (rows != 0) {
        throw SchemaError("no-face record must have an empty landmark list");
      }
      return MeshFrame::without_face(ts, static_cast<int>(w), static_cast<int>(h));
    }
    if (rows != kLandmarkCount) {
      throw SchemaError("face record needs 468 landmarks, got " + std::to_string(rows));
    }
    return MeshFrame::with_face(ts, static_cast<int>(w), static_cast<int>(h), std::move(lm));
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what); }

  char peek() const { return p_ < end_ ? *p_ : '\0'; }

  void skip_ws() {
    while (p_ < end_ && (*p_ == ' ' || *p_ == '\t' || *p_ == '\r' || *p_ == '\n')) {
      ++p_;
    }
  }

  void expect(char c) {
    if (p_ >= end_ || *p_ != c) {
      fail(std::string("expected '") + c + "'");
    }
    ++p_;
  }

  // Keys containing escapes never equal a known field name and fall through as unknown.
  std::string_view parse_key() {
    if (peek() != '"') {
      fail("expected field name");
    }
    const char* start = p_ + 1;
    skip_string();
    return {start, static_cast<std::size_t>(p_ - 1 - start)};
  }

  void skip_string() {
    expect('"');
    while (p_ < end_ && *p_ != '"') {
      if (*p_ == '\\') {
        ++p_;
        if (p_ >= end_) break;
      } else if (static_cast<unsigned char>(*p_) < 0x20) {
        fail("control character in string");
      }
      ++p_;
    }
    if (p_ >= end_) {
      fail("unterminated string");
    }
    ++p_;
  }

  bool match_literal(std::string_view lit) {
    if (static_cast<std::size_t>(end_ - p_) >= lit.size() && std::memcmp(p_, lit.data(), lit.size()) == 0) {
      p_ += lit.size();
      return true;
    }
    return false;
  }

  // Validates any JSON value so that type errors can be told apart from syntax errors.
  void skip_value(int depth = 0) {
    if (depth > 64) {
      fail("nesting too deep");
    }
    skip_ws();
    const char c = peek();
    if (c == '"') {
      skip_string();
    } else if (c == '{' || c == '[') {
      const char close = c == '{' ? '}' : ']';
      ++p_;
      skip_ws();
      if (peek() == close) {
        ++p_;
        return;
      }
      for (;;) {
        skip_ws();
        if (close == '}') {
          skip_string();
          skip_ws();
          expect(':');
        }
        skip_value(depth + 1);
        skip_ws();
        if (peek() == ',') {
          ++p_;
          continue;
        }
        expect(close);
        return;
      }
    } else if (match_literal("true") || match_literal("false") || match_literal("null")) {
    } else {
      scan_number();
    }
  }

  NumberToken scan_number() {
    NumberToken t;
    const char* p = p_;
    t.begin = p;
    if (p < end_ && *p == '-') {
      t.negative = true;
      ++p;
    }
    if (p >= end_ || !is_digit(*p)) {
      fail("invalid number");
    }
    // Every digit after a leading "0" integer part is accumulated; more than
    // 19 of them flags the token for the exact slow path.
    std::uint64_t m = 0;
    int digits = 0;
    if (*p == '0') {
      ++p;
      if (p < end_ && is_digit(*p)) {
        fail("leading zero in number");
      }
    } else {
      while (p < end_ && is_digit(*p)) {
        m = m * 10 + static_cast<unsigned>(*p - '0');
        ++digits;
        ++p;
      }
    }
    int exp10 = 0;
    if (p < end_ && *p == '.') {
      t.integral = false;
      const char* frac = ++p;
      while (p < end_ && is_digit(*p)) {
        m = m * 10 + static_cast<unsigned>(*p - '0');
        ++p;
      }
      const auto nfrac = static_cast<int>(p - frac);
      if (nfrac == 0) {
        fail("digit expected after decimal point");
      }
      digits += nfrac;
      exp10 = -nfrac;
    }
    if (p < end_ && (*p == 'e' || *p == 'E')) {
      t.integral = false;
      ++p;
      bool neg = false;
      if (p < end_ && (*p == '+' || *p == '-')) {
        neg = *p == '-';
        ++p;
      }
      if (p >= end_ || !is_digit(*p)) {
        fail("digit expected in exponent");
      }
      int e = 0;
      while (p < end_ && is_digit(*p)) {
        if (e < 100000) e = e * 10 + (*p - '0');
        ++p;
      }
      exp10 += neg ? -e : e;
    }
    t.mantissa = m;
    t.exp10 = exp10;
    t.overflow = digits > 19;
    t.end = p;
    p_ = p;
    return t;
  }

  double to_double(const NumberToken& t) const {
    if (!t.overflow && t.mantissa <= (std::uint64_t{1} << 53) && t.exp10 >= -22 && t.exp10 <= 0) [[likely]] {
      const double v = static_cast<double>(t.mantissa) / kPow10[-t.exp10];
      return t.negative ? -v : v;
    }
    return to_double_general(t);
  }

  double to_double_general(const NumberToken& t) const {
    // Clinger's fast path: exact when both operands are exactly representable.
    if (!t.overflow && t.mantissa <= (std::uint64_t{1} << 53) && t.exp10 >= -22 && t.exp10 <= 22) {
      double v = static_cast<double>(t.mantissa);
      v = t.exp10 < 0 ? v / kPow10[-t.exp10] : v * kPow10[t.exp10];
      return t.negative ? -v : v;
    }
    double v = 0.0;
    const auto r = std::from_chars(t.begin, t.end, v);
    if (r.ec != std::errc{} || !std::isfinite(v)) {
      throw SchemaError("number out of range: " + std::string(t.begin, t.end));
    }
    return v;
  }

  std::int64_t parse_integer_field(const char* name) {
    const char c = peek();
    if (c != '-' && (c < '0' || c > '9')) {
      skip_value();
      throw SchemaError(std::string("field \"") + name + "\" must be an integer");
    }
    const NumberToken t = scan_number();
    if (!t.integral) {
      throw SchemaError(std::string("field \"") + name + "\" must be an integer");
    }
    std::int64_t v = 0;
    const auto r = std::from_chars(t.begin, t.end, v);
    if (r.ec != std::errc{}) {
      throw SchemaError(std::string("field \"") + name + "\" out of range");
    }
    return v;
  }

  bool parse_bool_field(const char* name) {
    if (match_literal("true")) return true;
    if (match_literal("false")) return false;
    skip_value();
    throw SchemaError(std::string("field \"") + name + "\" must be true or false");
  }

  // Compact `[x,y,z]` triple with no inner whitespace; anything else goes through parse_triple.
  bool try_compact_triple(double* xyz) {
    const char* p = p_;
    for (int k = 0; k < 3; ++k) {
      p = fast_decimal(p, end_, xyz[k]);
      const char want = k < 2 ? ',' : ']';
      if (p == nullptr || p >= end_ || *p != want) {
        return false;
      }
      ++p;
    }
    p_ = p;
    return true;
  }

  int parse_triple(double* xyz) {
    int n = 0;
    skip_ws();
    if (peek() == ']') {
      ++p_;
      return 0;
    }
    for (;;) {
      skip_ws();
      const char c = peek();
      if (c != '-' && !is_digit(c)) {
        skip_value();
        throw SchemaError("landmark coordinate must be a number");
      }
      const double v = to_double(scan_number());
      if (n < 3) xyz[n] = v;
      ++n;
      skip_ws();
      if (peek() == ',') {
        ++p_;
        continue;
      }
      expect(']');
      return n;
    }
  }

  Eigen::Index parse_landmarks(LandmarkMatrix& lm) {
    if (peek() != '[') {
      skip_value();
      throw SchemaError("field \"lm\" must be an array");
    }
    ++p_;
    skip_ws();
    Eigen::Index rows = 0;
    if (peek() == ']') {
      ++p_;
      return 0;
    }
    double* out = lm.data();
    for (;;) {
      skip_ws();
      if (peek() != '[') {
        skip_value();
        throw SchemaError("landmark must be an [x,y,z] triple");
      }
      ++p_;
      double xyz[3];
      if (!try_compact_triple(xyz)) {
        const int n = parse_triple(xyz);
        if (n != 3) {
          throw SchemaError("landmark must have exactly 3 coordinates, got " + std::to_string(n));
        }
      }
      if (rows < kLandmarkCount) {
        out[0] = xyz[0];
        out[1] = xyz[1];
        out[2] = xyz[2];
        out += 3;
      }
      ++rows;
      if (p_ < end_ && *p_ == ',') {
        ++p_;
        continue;
      }
      skip_ws();
      if (peek() == ',') {
        ++p_;
        continue;
      }
      expect(']');
      return rows;
    }
  }

  const char* p_;
  const char* end_;
};

// Values on a 1e-4 grid print as at most four fraction digits, which parse
// back to the same double. Shortest-form to_chars is several times slower
// on them, and synthetic frames are almost all grid values.
char* write_grid_double(char* p, double v) {
  const double a = std::abs(v);
  if (!(a > 0.0 && a < 1e6)) return nullptr;
  const auto k = static_cast<std::int64_t>(a * 1e4 + 0.5);
  if (static_cast<double>(k) / 1e4 != a) return nullptr;
  if (v < 0.0) *p++ = '-';
  p = std::to_chars(p, p + 8, k / 10000).ptr;
  int frac = static_cast<int>(k % 10000);
  if (frac == 0) return p;
  int digits = 4;
  while (frac % 10 == 0) {
    frac /= 10;
    --digits;
  }
  *p = '.';
  for (int i = digits; i >= 1; --i, frac /= 10) p[i] = static_cast<char>('0' + frac % 10);
  return p + digits + 1;
}

// Room for any double in shortest form plus separators.
constexpr std::size_t kMaxDoubleChars = 26;

char* write_double(char* p, double v) {
  if (char* q = write_grid_double(p, v)) return q;
  return std::to_chars(p, p + kMaxDoubleChars, v).ptr;
}

char* write_literal(char* p, std::string_view s) {
  std::memcpy(p, s.data(), s.size());
  return p + s.size();
}

}  // namespace

MeshFrame parse_frame(std::string_view line) { return RecordParser(line).parse(); }

void serialize_frame(const MeshFrame& frame, std::string& out) {
  const auto& lm = frame.landmarks();
  out.resize(96 + static_cast<std::size_t>(lm.rows()) * (3 * kMaxDoubleChars + 4));
  char* const begin = out.data();
  char* p = begin;
  p = write_literal(p, "{\"ts_ms\":");
  p = std::to_chars(p, p + 20, frame.ts_ms()).ptr;
  p = write_literal(p, ",\"w\":");
  p = std::to_chars(p, p + 11, frame.width()).ptr;
  p = write_literal(p, ",\"h\":");
  p = std::to_chars(p, p + 11, frame.height()).ptr;
  p = write_literal(p, frame.face_present() ? ",\"face\":true,\"lm\":[" : ",\"face\":false,\"lm\":[");
  for (Eigen::Index i = 0; i < lm.rows(); ++i) {
    if (i > 0) *p++ = ',';
    *p++ = '[';
    p = write_double(p, lm(i, 0));
    *p++ = ',';
    p = write_double(p, lm(i, 1));
    *p++ = ',';
    p = write_double(p, lm(i, 2));
    *p++ = ']';
  }
  p = write_literal(p, "]}");
  out.resize(static_cast<std::size_t>(p - begin));
}

std::string serialize_frame(const MeshFrame& frame) {
  std::string out;
  serialize_frame(frame, out);
  return out;
}

void TimestampGuard::check(std::int64_t ts_ms) {
  if (seen_ && ts_ms <= last_) {
    throw OutOfOrder("timestamp " + std::to_string(ts_ms) + " not after " + std::to_string(last_));
  }
  seen_ = true;
  last_ = ts_ms;
}

namespace {

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

std::vector<MeshFrame> read_session(std::istream& in) {
  std::vector<MeshFrame> frames;
  TimestampGuard guard;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      frames.push_back(parse_frame(line));
      guard.check(frames.back().ts_ms());
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const OutOfOrder& e) {
      throw OutOfOrder("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return frames;
}

void write_session(std::ostream& out, const std::vector<MeshFrame>& frames) {
  std::string line;
  for (const auto& f : frames) {
    serialize_frame(f, line);
    line += '\n';
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
}

}  // namespace drowsy
