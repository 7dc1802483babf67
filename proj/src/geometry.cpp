#include "spcc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "spcc/error.hpp"
#include "spcc/parallel.hpp"

namespace spcc {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Exact values at multiples of 90 degrees keep axis-aligned frames exact.
void sincos_deg(int deg, double& s, double& c) {
  const int m = ((deg % 360) + 360) % 360;
  switch (m) {
    case 0: s = 0; c = 1; return;
    case 90: s = 1; c = 0; return;
    case 180: s = 0; c = -1; return;
    case 270: s = -1; c = 0; return;
    default:
      s = std::sin(deg * kDegToRad);
      c = std::cos(deg * kDegToRad);
  }
}

Vec2 to_vec(Point2i p) { return {static_cast<double>(p.x), static_cast<double>(p.y)}; }

void extent_interval(const ExtrudeCmd& e, double& lo, double& hi) {
  const double d1 = e.dist1 / kLevelsPerUnit;
  const double d2 = e.dist2 / kLevelsPerUnit;
  switch (e.extent) {
    case ExtentType::OneSided: lo = 0.0; hi = d1; return;
    case ExtentType::Symmetric: lo = -0.5 * d1; hi = 0.5 * d1; return;
    case ExtentType::TwoSided: lo = -d2; hi = d1; return;
  }
}

bool crosses_line(Vec2 a, Vec2 b, Vec2 p) {
  if ((a.y > p.y) == (b.y > p.y)) return false;
  const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
  return p.x < x;
}

// Splits the arc at its topmost/bottommost points so every piece is
// y-monotone, then applies the same half-open crossing rule as for lines.
int arc_crossings(Vec2 start, Vec2 end, const ArcGeometry& g, Vec2 p) {
  const double a0 = g.start_angle;
  const double a1 = g.start_angle + g.signed_sweep;
  const double lo = std::min(a0, a1);
  const double hi = std::max(a0, a1);

  std::vector<double> cuts;
  const double half_pi = std::numbers::pi / 2;
  for (double k = std::ceil((lo - half_pi) / std::numbers::pi);; k += 1.0) {
    const double a = half_pi + k * std::numbers::pi;
    if (a >= hi) break;
    if (a > lo) cuts.push_back(a);
  }
  if (g.signed_sweep < 0) std::reverse(cuts.begin(), cuts.end());

  int crossings = 0;
  Vec2 prev = start;
  double prev_angle = a0;
  auto piece = [&](Vec2 next, double next_angle) {
    if ((prev.y > p.y) != (next.y > p.y)) {
      const double dy = p.y - g.center.y;
      const double dx = std::sqrt(std::max(0.0, g.radius * g.radius - dy * dy));
      const double mid = 0.5 * (prev_angle + next_angle);
      const double x = std::cos(mid) >= 0 ? g.center.x + dx : g.center.x - dx;
      if (p.x < x) ++crossings;
    }
    prev = next;
    prev_angle = next_angle;
  };
  for (double a : cuts) {
    piece({g.center.x + g.radius * std::cos(a), g.center.y + g.radius * std::sin(a)}, a);
  }
  piece(end, a1);
  return crossings;
}

bool inside_loop(const Loop& loop, Vec2 p) {
  if (loop.curves.size() == 1) {
    if (const auto* circle = std::get_if<Circle>(&loop.curves.front())) {
      const double dx = p.x - circle->center.x;
      const double dy = p.y - circle->center.y;
      return dx * dx + dy * dy < static_cast<double>(circle->radius) * circle->radius;
    }
  }
  int crossings = 0;
  Point2i prev{0, 0};
  for (const auto& curve : loop.curves) {
    if (const auto* line = std::get_if<Line>(&curve)) {
      if (crosses_line(to_vec(prev), to_vec(line->end), p)) ++crossings;
      prev = line->end;
    } else if (const auto* arc = std::get_if<Arc>(&curve)) {
      crossings += arc_crossings(to_vec(prev), to_vec(arc->end), arc_geometry(prev, *arc), p);
      prev = arc->end;
    }
  }
  return (crossings & 1) != 0;
}

void grow(Box& box, Vec3 p) {
  box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y), std::min(box.min.z, p.z)};
  box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y), std::max(box.max.z, p.z)};
}

Box empty_box() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {{inf, inf, inf}, {-inf, -inf, -inf}};
}

void require_valid(const CadModel& model) {
  const auto violations = validate_static(model);
  if (violations.empty()) return;
  std::vector<std::string> messages;
  for (const auto& v : violations) messages.push_back(v.message);
  const std::string summary = "invalid model: " + messages.front();
  throw ValidationError(summary, std::move(messages));
}

unsigned resolve_jobs(unsigned jobs) { return jobs == 0 ? default_jobs() : jobs; }

}  // namespace

PlaneFrame plane_frame(const ExtrudeCmd& extrude) {
  double sa, ca, sb, cb, sg, cg;
  sincos_deg(extrude.orient[0], sa, ca);
  sincos_deg(extrude.orient[1], sb, cb);
  sincos_deg(extrude.orient[2], sg, cg);

  PlaneFrame f;
  f.u = {ca * cb, sa * cb, -sb};
  f.v = {ca * sb * sg - sa * cg, sa * sb * sg + ca * cg, cb * sg};
  f.n = {ca * sb * cg + sa * sg, sa * sb * cg - ca * sg, cb * cg};
  f.origin = {dequantize(extrude.origin.x, {}, true, "origin"),
              dequantize(extrude.origin.y, {}, true, "origin"),
              dequantize(extrude.origin.z, {}, true, "origin")};
  return f;
}

ArcGeometry arc_geometry(Point2i start, const Arc& arc) {
  const Vec2 s = to_vec(start);
  const Vec2 e = to_vec(arc.end);
  const double sweep = arc.sweep * kDegToRad;
  const double cx = e.x - s.x;
  const double cy = e.y - s.y;
  const double chord = std::hypot(cx, cy);
  // Left normal of the chord direction.
  const double nx = -cy / chord;
  const double ny = cx / chord;
  const double h = 0.5 * chord / std::tan(0.5 * sweep);
  const double side = arc.ccw ? 1.0 : -1.0;

  ArcGeometry g;
  g.center = {0.5 * (s.x + e.x) + side * h * nx, 0.5 * (s.y + e.y) + side * h * ny};
  g.radius = 0.5 * chord / std::sin(0.5 * sweep);
  g.start_angle = std::atan2(s.y - g.center.y, s.x - g.center.x);
  g.signed_sweep = side * sweep;
  return g;
}

bool point_in_sketch(const Sketch& sketch, Vec2 p) {
  bool inside = false;
  for (const auto& loop : sketch.loops) {
    if (inside_loop(loop, p)) inside = !inside;
  }
  return inside;
}

SketchBounds sketch_bounds(const Sketch& sketch) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  SketchBounds b{{inf, inf}, {-inf, -inf}};
  auto add = [&](double x, double y) {
    b.min = {std::min(b.min.x, x), std::min(b.min.y, y)};
    b.max = {std::max(b.max.x, x), std::max(b.max.y, y)};
  };
  for (const auto& loop : sketch.loops) {
    Point2i prev{0, 0};
    for (const auto& curve : loop.curves) {
      if (const auto* circle = std::get_if<Circle>(&curve)) {
        add(circle->center.x - circle->radius, circle->center.y - circle->radius);
        add(circle->center.x + circle->radius, circle->center.y + circle->radius);
        continue;
      }
      if (const auto* arc = std::get_if<Arc>(&curve)) {
        const ArcGeometry g = arc_geometry(prev, *arc);
        add(g.center.x - g.radius, g.center.y - g.radius);
        add(g.center.x + g.radius, g.center.y + g.radius);
        prev = arc->end;
      } else {
        prev = std::get<Line>(curve).end;
      }
      add(prev.x, prev.y);
    }
    if (!loop.curves.empty() && !std::holds_alternative<Circle>(loop.curves.front())) add(0, 0);
  }
  return b;
}

bool sketch_has_area(const Sketch& sketch, int resolution) {
  const SketchBounds b = sketch_bounds(sketch);
  if (!(b.max.x > b.min.x) || !(b.max.y > b.min.y)) return false;
  const double sx = (b.max.x - b.min.x) / resolution;
  const double sy = (b.max.y - b.min.y) / resolution;
  for (int j = 0; j < resolution; ++j) {
    for (int i = 0; i < resolution; ++i) {
      if (point_in_sketch(sketch, {b.min.x + (i + 0.5) * sx, b.min.y + (j + 0.5) * sy})) return true;
    }
  }
  return false;
}

std::size_t VoxelSolid::count() const {
  return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), std::uint8_t{1}));
}

bool inside_prism(const SketchExtrudePair& pair, const PlaneFrame& frame, Vec3 p) {
  const ExtrudeCmd& e = pair.extrude;
  if (!(e.scale > 0.0)) return false;
  const Vec3 d = p - frame.origin;
  const double depth = dot(d, frame.n);
  double lo = 0, hi = 0;
  extent_interval(e, lo, hi);
  if (depth < lo || depth > hi) return false;
  const double to_sketch = kLevelsPerUnit / e.scale;
  return point_in_sketch(pair.sketch, {dot(d, frame.u) * to_sketch, dot(d, frame.v) * to_sketch});
}

Box prism_bounds(const SketchExtrudePair& pair) {
  const PlaneFrame f = plane_frame(pair.extrude);
  const SketchBounds sb = sketch_bounds(pair.sketch);
  double lo = 0, hi = 0;
  extent_interval(pair.extrude, lo, hi);
  const double k = pair.extrude.scale / kLevelsPerUnit;
  Box box = empty_box();
  for (int corner = 0; corner < 8; ++corner) {
    const double x = ((corner & 1) ? sb.max.x : sb.min.x) * k;
    const double y = ((corner & 2) ? sb.max.y : sb.min.y) * k;
    const double z = (corner & 4) ? hi : lo;
    grow(box, f.origin + f.u * x + f.v * y + f.n * z);
  }
  return box;
}

GridSpec model_grid(const CadModel& model, int resolution) {
  if (resolution < 4) throw DomainError("voxel resolution must be at least 4");
  Box box = empty_box();
  for (const auto& pair : model.pairs) {
    if (pair.extrude.op == BooleanOp::NewBody || pair.extrude.op == BooleanOp::Join) {
      const Box b = prism_bounds(pair);
      grow(box, b.min);
      grow(box, b.max);
    }
  }
  if (!(box.max.x >= box.min.x)) box = {{0, 0, 0}, {1, 1, 1}};
  const Vec3 mid = (box.min + box.max) * 0.5;
  double side = std::max({box.max.x - box.min.x, box.max.y - box.min.y, box.max.z - box.min.z});
  side = std::max(side, 1.0 / kLevelsPerUnit);

  GridSpec grid;
  grid.resolution = resolution;
  grid.voxel = side / (resolution - 2);
  const double half = 0.5 * resolution * grid.voxel;
  grid.min = {mid.x - half, mid.y - half, mid.z - half};
  return grid;
}

std::vector<std::uint8_t> prism_mask(const SketchExtrudePair& pair, const GridSpec& grid,
                                     unsigned jobs) {
  std::vector<std::uint8_t> mask(grid.cell_count(), 0);
  const PlaneFrame frame = plane_frame(pair.extrude);
  const Box b = prism_bounds(pair);
  const int r = grid.resolution;
  auto index_range = [&](double lo, double hi, double gmin, int& first, int& last) {
    first = std::clamp(static_cast<int>(std::floor((lo - gmin) / grid.voxel)) - 1, 0, r - 1);
    last = std::clamp(static_cast<int>(std::ceil((hi - gmin) / grid.voxel)) + 1, 0, r - 1);
  };
  int i0, i1, j0, j1, k0, k1;
  index_range(b.min.x, b.max.x, grid.min.x, i0, i1);
  index_range(b.min.y, b.max.y, grid.min.y, j0, j1);
  index_range(b.min.z, b.max.z, grid.min.z, k0, k1);
  if (!(b.max.x >= b.min.x)) return mask;

  parallel_for(static_cast<std::size_t>(k1 - k0 + 1), resolve_jobs(jobs), [&](std::size_t dk) {
    const int k = k0 + static_cast<int>(dk);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        if (inside_prism(pair, frame, grid.center(i, j, k))) mask[grid.index(i, j, k)] = 1;
      }
    }
  });
  return mask;
}

VoxelSolid evaluate_on_grid(const CadModel& model, const GridSpec& grid, unsigned jobs) {
  require_valid(model);
  VoxelSolid solid;
  solid.grid = grid;
  solid.occupancy.assign(grid.cell_count(), 0);
  for (const auto& pair : model.pairs) {
    const auto mask = prism_mask(pair, grid, jobs);
    auto& occ = solid.occupancy;
    switch (pair.extrude.op) {
      case BooleanOp::NewBody:
      case BooleanOp::Join:
        for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = occ[i] | mask[i];
        break;
      case BooleanOp::Cut:
        for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = occ[i] & (mask[i] ^ 1);
        break;
      case BooleanOp::Intersect:
        for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = occ[i] & mask[i];
        break;
    }
  }
  return solid;
}

VoxelSolid evaluate_model(const CadModel& model, int resolution, unsigned jobs) {
  require_valid(model);
  return evaluate_on_grid(model, model_grid(model, resolution), jobs);
}

std::vector<std::size_t> boundary_voxels(const VoxelSolid& solid) {
  std::vector<std::size_t> out;
  const int r = solid.resolution();
  auto empty = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= r || j >= r || k >= r) return true;
    return !solid.at(i, j, k);
  };
  for (int k = 0; k < r; ++k) {
    for (int j = 0; j < r; ++j) {
      for (int i = 0; i < r; ++i) {
        if (!solid.at(i, j, k)) continue;
        if (empty(i - 1, j, k) || empty(i + 1, j, k) || empty(i, j - 1, k) || empty(i, j + 1, k) ||
            empty(i, j, k - 1) || empty(i, j, k + 1)) {
          out.push_back(solid.grid.index(i, j, k));
        }
      }
    }
  }
  return out;
}

PointCloud sample_surface_points(const VoxelSolid& solid, int n, std::uint64_t seed) {
  if (n < 0) throw DomainError("sample count must be non-negative");
  const auto boundary = boundary_voxels(solid);
  if (boundary.empty()) throw EmptinessError("cannot sample points from an empty solid");
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const auto r = static_cast<std::size_t>(solid.resolution());
  const double h = solid.grid.voxel;

  PointCloud cloud;
  cloud.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const std::size_t idx = boundary[rng() % boundary.size()];
    const int i = static_cast<int>(idx % r);
    const int j = static_cast<int>((idx / r) % r);
    const int k = static_cast<int>(idx / (r * r));
    const Vec3 c = solid.grid.center(i, j, k);
    const double jx = (unit() - 0.5) * h;
    const double jy = (unit() - 0.5) * h;
    const double jz = (unit() - 0.5) * h;
    cloud.push_back({c.x + jx, c.y + jy, c.z + jz});
  }
  return cloud;
}

BuildCheck check_buildable(const CadModel& model, int resolution, unsigned jobs) {
  const auto violations = validate_static(model);
  if (!violations.empty()) return {false, violations.front().message};
  for (std::size_t p = 0; p < model.pairs.size(); ++p) {
    const auto& pair = model.pairs[p];
    if (!(pair.extrude.scale > 0.0) || !sketch_has_area(pair.sketch, resolution)) {
      return {false, "pair " + std::to_string(p + 1) + ": sketch region is empty"};
    }
  }
  const VoxelSolid solid = evaluate_model(model, resolution, jobs);
  if (solid.count() == 0) return {false, "empty solid"};
  return {true, ""};
}

}  // namespace spcc
