#pragma once

// Typed sketch-extrude command sequences.
//
// All coordinates are stored in their 8-bit quantized form. Sketch points and
// the sketch-plane origin are recentered so that level 128 maps to 0, giving
// [-128, 127]; radii and extrusion distances keep the raw [0, 255] range.
// Angles are whole degrees. The profile scale is the only real-valued field.

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace spcc {

struct Point2i {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point2i&, const Point2i&) = default;
};

struct Point3i {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const Point3i&, const Point3i&) = default;
};

struct Line {
  Point2i end;
  friend bool operator==(const Line&, const Line&) = default;
};

// Circular arc from the previous endpoint to `end`, turning by `sweep`
// degrees, counterclockwise when `ccw` is set.
struct Arc {
  Point2i end;
  int sweep = 0;
  bool ccw = true;
  friend bool operator==(const Arc&, const Arc&) = default;
};

struct Circle {
  Point2i center;
  int radius = 0;
  friend bool operator==(const Circle&, const Circle&) = default;
};

using CurveCmd = std::variant<Line, Arc, Circle>;

// A closed profile. Line/Arc chains start at the sketch origin (0, 0) and
// must return to it; a circle loop holds exactly one Circle.
struct Loop {
  std::vector<CurveCmd> curves;
  friend bool operator==(const Loop&, const Loop&) = default;
};

// First loop is the outer profile, the rest combine by the even-odd rule.
struct Sketch {
  std::vector<Loop> loops;
  friend bool operator==(const Sketch&, const Sketch&) = default;
};

enum class BooleanOp { NewBody, Join, Cut, Intersect };
enum class ExtentType { OneSided, Symmetric, TwoSided };

struct ExtrudeCmd {
  std::array<int, 3> orient{0, 0, 0};  // theta, phi, gamma in degrees
  Point3i origin;
  double scale = 1.0;
  int dist1 = 0;
  int dist2 = 0;
  BooleanOp op = BooleanOp::NewBody;
  ExtentType extent = ExtentType::OneSided;
  friend bool operator==(const ExtrudeCmd&, const ExtrudeCmd&) = default;
};

struct SketchExtrudePair {
  Sketch sketch;
  ExtrudeCmd extrude;
  friend bool operator==(const SketchExtrudePair&, const SketchExtrudePair&) = default;
};

struct CadModel {
  std::string id;
  std::vector<SketchExtrudePair> pairs;
  friend bool operator==(const CadModel&, const CadModel&) = default;
};

struct QuantSpec {
  int levels = 256;
  int recenter_offset = 128;
};

inline constexpr int kCoordMin = -128;
inline constexpr int kCoordMax = 127;
inline constexpr int kLengthMin = 0;
inline constexpr int kLengthMax = 255;
inline constexpr int kAngleMin = -180;
inline constexpr int kAngleMax = 180;
inline constexpr int kSweepMin = 0;
inline constexpr int kSweepMax = 360;
inline constexpr double kScaleMin = 0.0;
inline constexpr double kScaleMax = 2.0;

// round(value * 255), minus the recenter offset when requested.
// Throws RangeError when value is outside [0, 1].
int quantize(double value, const QuantSpec& spec = {}, bool recenter = false,
             const std::string& parameter = "value");

// Inverse of quantize. Throws RangeError for levels outside the mode's range.
double dequantize(int level, const QuantSpec& spec = {}, bool recenter = false,
                  const std::string& parameter = "level");

// Equality of everything except the sketch-plane origin.
bool pairs_equivalent_mod_origin(const SketchExtrudePair& a, const SketchExtrudePair& b);

// Hex SHA-256 over the code-text serialization of the pairs. The model id is
// not part of the digest.
std::string canonical_hash(const CadModel& model);

struct Violation {
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

// Empty iff every type invariant holds. Never throws.
std::vector<Violation> validate_static(const CadModel& model);

// Number of curve commands across all loops of all pairs plus one extrude
// per pair.
std::size_t command_count(const CadModel& model);

const char* to_string(BooleanOp op);
const char* to_string(ExtentType extent);

}  // namespace spcc
