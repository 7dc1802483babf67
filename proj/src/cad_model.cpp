#include "spcc/cad_model.hpp"

#include <cmath>
#include <string>

#include "spcc/codec.hpp"
#include "spcc/digest.hpp"
#include "spcc/error.hpp"

namespace spcc {

namespace {

int max_level(const QuantSpec& spec) { return spec.levels - 1; }

bool in_range(int v, int lo, int hi) { return v >= lo && v <= hi; }

std::string where(std::size_t pair, std::size_t loop) {
  return "pair " + std::to_string(pair + 1) + ", loop " + std::to_string(loop + 1);
}

void check_loop(const Loop& loop, std::size_t pair_index, std::size_t loop_index,
                std::vector<Violation>& out) {
  const std::string at = where(pair_index, loop_index);
  if (loop.curves.empty()) {
    out.push_back({at + ": empty loop"});
    return;
  }

  std::size_t circles = 0;
  for (const auto& c : loop.curves) {
    if (std::holds_alternative<Circle>(c)) ++circles;
  }
  if (circles > 0) {
    if (loop.curves.size() != 1) {
      out.push_back({at + ": a circle must be the only curve of its loop"});
      return;
    }
    const auto& circle = std::get<Circle>(loop.curves.front());
    if (!in_range(circle.center.x, kCoordMin, kCoordMax) ||
        !in_range(circle.center.y, kCoordMin, kCoordMax)) {
      out.push_back({at + ": circle center outside [-128, 127]"});
    }
    if (!in_range(circle.radius, kLengthMin, kLengthMax)) {
      out.push_back({at + ": circle radius outside [0, 255]"});
    } else if (circle.radius == 0) {
      out.push_back({at + ": circle radius must be positive"});
    }
    return;
  }

  if (loop.curves.size() < 2) {
    out.push_back({at + ": a line/arc loop needs at least two curves"});
  }

  Point2i prev{0, 0};
  for (std::size_t i = 0; i < loop.curves.size(); ++i) {
    const std::string curve_at = at + ", curve " + std::to_string(i + 1);
    Point2i end;
    if (const auto* line = std::get_if<Line>(&loop.curves[i])) {
      end = line->end;
      if (end == prev) out.push_back({curve_at + ": zero-length line"});
    } else {
      const auto& arc = std::get<Arc>(loop.curves[i]);
      end = arc.end;
      if (!in_range(arc.sweep, kSweepMin, kSweepMax)) {
        out.push_back({curve_at + ": arc sweep outside [0, 360]"});
      } else if (arc.sweep == 0) {
        out.push_back({curve_at + ": arc sweep must be positive"});
      } else if (arc.sweep == kSweepMax) {
        out.push_back({curve_at + ": arc sweep of 360 does not define a center"});
      }
      if (end == prev) out.push_back({curve_at + ": arc endpoints coincide"});
    }
    if (!in_range(end.x, kCoordMin, kCoordMax) || !in_range(end.y, kCoordMin, kCoordMax)) {
      out.push_back({curve_at + ": endpoint outside [-128, 127]"});
    }
    prev = end;
  }
  if (prev != Point2i{0, 0}) {
    out.push_back({at + ": unclosed chain, last endpoint (" + std::to_string(prev.x) + "," +
                   std::to_string(prev.y) + ") does not return to (0,0)"});
  }
}

void check_extrude(const ExtrudeCmd& e, std::size_t pair_index, std::vector<Violation>& out) {
  const std::string at = "pair " + std::to_string(pair_index + 1);
  static constexpr const char* kAngleNames[] = {"theta", "phi", "gamma"};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!in_range(e.orient[i], kAngleMin, kAngleMax)) {
      out.push_back({at + ": " + kAngleNames[i] + " outside [-180, 180]"});
    }
  }
  if (!in_range(e.origin.x, kCoordMin, kCoordMax) || !in_range(e.origin.y, kCoordMin, kCoordMax) ||
      !in_range(e.origin.z, kCoordMin, kCoordMax)) {
    out.push_back({at + ": origin outside [-128, 127]"});
  }
  if (!std::isfinite(e.scale) || e.scale < kScaleMin || e.scale > kScaleMax) {
    out.push_back({at + ": scale outside [0, 2]"});
  }
  if (!in_range(e.dist1, kLengthMin, kLengthMax)) {
    out.push_back({at + ": dist1 outside [0, 255]"});
  }
  if (!in_range(e.dist2, kLengthMin, kLengthMax)) {
    out.push_back({at + ": dist2 outside [0, 255]"});
  }
  if (e.extent != ExtentType::TwoSided && e.dist2 != 0) {
    out.push_back({at + ": dist2 must be 0 unless extent is TwoSided"});
  }
}

}  // namespace

int quantize(double value, const QuantSpec& spec, bool recenter, const std::string& parameter) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw RangeError(parameter, "value " + std::to_string(value) + " outside [0, 1]");
  }
  const int level = static_cast<int>(std::lround(value * max_level(spec)));
  return recenter ? level - spec.recenter_offset : level;
}

double dequantize(int level, const QuantSpec& spec, bool recenter, const std::string& parameter) {
  const int lo = recenter ? -spec.recenter_offset : 0;
  const int hi = lo + max_level(spec);
  if (level < lo || level > hi) {
    throw RangeError(parameter, "level " + std::to_string(level) + " outside [" +
                                    std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  const int raw = recenter ? level + spec.recenter_offset : level;
  return static_cast<double>(raw) / max_level(spec);
}

bool pairs_equivalent_mod_origin(const SketchExtrudePair& a, const SketchExtrudePair& b) {
  if (a.sketch != b.sketch) return false;
  ExtrudeCmd ea = a.extrude;
  ea.origin = b.extrude.origin;
  return ea == b.extrude;
}

std::string canonical_hash(const CadModel& model) {
  return sha256_hex(format_code_unchecked(model));
}

std::vector<Violation> validate_static(const CadModel& model) {
  std::vector<Violation> out;
  if (model.pairs.empty()) {
    out.push_back({"model has no sketch-extrude pairs"});
    return out;
  }
  if (model.pairs.front().extrude.op != BooleanOp::NewBody) {
    out.push_back({"first op must be NewBody"});
  }
  for (std::size_t p = 0; p < model.pairs.size(); ++p) {
    const auto& pair = model.pairs[p];
    if (pair.sketch.loops.empty()) {
      out.push_back({"pair " + std::to_string(p + 1) + ": sketch has no loops"});
    }
    for (std::size_t l = 0; l < pair.sketch.loops.size(); ++l) {
      check_loop(pair.sketch.loops[l], p, l, out);
    }
    check_extrude(pair.extrude, p, out);
  }
  return out;
}

std::size_t command_count(const CadModel& model) {
  std::size_t n = 0;
  for (const auto& pair : model.pairs) {
    for (const auto& loop : pair.sketch.loops) n += loop.curves.size();
    ++n;
  }
  return n;
}

const char* to_string(BooleanOp op) {
  switch (op) {
    case BooleanOp::NewBody: return "NewBody";
    case BooleanOp::Join: return "Join";
    case BooleanOp::Cut: return "Cut";
    case BooleanOp::Intersect: return "Intersect";
  }
  return "?";
}

const char* to_string(ExtentType extent) {
  switch (extent) {
    case ExtentType::OneSided: return "OneSided";
    case ExtentType::Symmetric: return "Symmetric";
    case ExtentType::TwoSided: return "TwoSided";
  }
  return "?";
}

}  // namespace spcc
