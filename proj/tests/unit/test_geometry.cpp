#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>

#include "spcc/error.hpp"
#include "spcc/geometry.hpp"
#include "support/csg_oracle.hpp"
#include "support/model_gen.hpp"

using namespace spcc;
using namespace spcc::testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

bool near(Vec3 a, Vec3 b, double eps = 1e-12) {
  return std::abs(a.x - b.x) < eps && std::abs(a.y - b.y) < eps && std::abs(a.z - b.z) < eps;
}

// Loops as dense polylines; even-odd over their edges.
std::vector<std::vector<Vec2>> polygonize(const Sketch& s) {
  std::vector<std::vector<Vec2>> out;
  for (const auto& loop : s.loops) {
    std::vector<Vec2> poly;
    Point2i prev{0, 0};
    for (const auto& curve : loop.curves) {
      if (const auto* c = std::get_if<Circle>(&curve)) {
        for (int i = 0; i < 4096; ++i) {
          const double a = 2 * kPi * i / 4096;
          poly.push_back({c->center.x + c->radius * std::cos(a), c->center.y + c->radius * std::sin(a)});
        }
      } else if (const auto* arc = std::get_if<Arc>(&curve)) {
        const ArcGeometry g = arc_geometry(prev, *arc);
        for (int i = 0; i < 2048; ++i) {
          const double a = g.start_angle + g.signed_sweep * i / 2048;
          poly.push_back({g.center.x + g.radius * std::cos(a), g.center.y + g.radius * std::sin(a)});
        }
        prev = arc->end;
      } else {
        poly.push_back({static_cast<double>(prev.x), static_cast<double>(prev.y)});
        prev = std::get<Line>(curve).end;
      }
    }
    out.push_back(poly);
  }
  return out;
}

double seg_dist(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - a.x - t * dx, p.y - a.y - t * dy);
}

// nullopt when p lies too close to an edge to call.
std::optional<bool> polygon_even_odd(const std::vector<std::vector<Vec2>>& polys, Vec2 p) {
  bool inside = false;
  for (const auto& poly : polys) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      if (seg_dist(p, poly[j], poly[i]) < 0.05) return std::nullopt;
      if ((poly[i].y > p.y) != (poly[j].y > p.y) &&
          p.x < (poly[j].x - poly[i].x) * (p.y - poly[i].y) / (poly[j].y - poly[i].y) + poly[i].x) {
        in = !in;
      }
    }
    if (in) inside = !inside;
  }
  return inside;
}

}  // namespace

TEST_CASE("plane frames are orthonormal and follow Rz Ry Rx") {
  ExtrudeCmd e;
  PlaneFrame f = plane_frame(e);
  CHECK(near(f.u, {1, 0, 0}));
  CHECK(near(f.v, {0, 1, 0}));
  CHECK(near(f.n, {0, 0, 1}));
  CHECK(near(f.origin, {128.0 / 255, 128.0 / 255, 128.0 / 255}));

  e.orient = {90, 0, 0};
  f = plane_frame(e);
  CHECK(near(f.u, {0, 1, 0}));
  CHECK(near(f.n, {0, 0, 1}));

  e.orient = {0, 90, 0};
  f = plane_frame(e);
  CHECK(near(f.n, {1, 0, 0}));
  CHECK(near(f.u, {0, 0, -1}));

  e.orient = {0, 0, 90};
  f = plane_frame(e);
  CHECK(near(f.n, {0, -1, 0}));
  CHECK(near(f.v, {0, 0, 1}));

  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    e.orient = random_orient(rng, false);
    f = plane_frame(e);
    CHECK(std::abs(dot(f.u, f.u) - 1) < 1e-12);
    CHECK(std::abs(dot(f.u, f.v)) < 1e-12);
    CHECK(std::abs(dot(f.u, f.n)) < 1e-12);
    CHECK(near(cross(f.u, f.v), f.n));
  }
}

TEST_CASE("arc geometry passes through both endpoints") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 500; ++t) {
    const Point2i s{uniform(rng, -128, 127), uniform(rng, -128, 127)};
    Point2i e;
    do e = {uniform(rng, -128, 127), uniform(rng, -128, 127)};
    while (e == s);
    const Arc arc{e, uniform(rng, 1, 359), coin(rng)};
    const ArcGeometry g = arc_geometry(s, arc);
    CHECK(std::hypot(s.x - g.center.x, s.y - g.center.y) == doctest::Approx(g.radius).epsilon(1e-9));
    CHECK(std::hypot(e.x - g.center.x, e.y - g.center.y) == doctest::Approx(g.radius).epsilon(1e-9));
    const double end_angle = g.start_angle + g.signed_sweep;
    CHECK(g.center.x + g.radius * std::cos(end_angle) == doctest::Approx(e.x).epsilon(1e-9));
    CHECK(g.center.y + g.radius * std::sin(end_angle) == doctest::Approx(e.y).epsilon(1e-9));
    CHECK((g.signed_sweep > 0) == arc.ccw);
  }
}

TEST_CASE("semicircle arcs bulge to the side given by the flag") {
  // From (10,0) to (-10,0): ccw goes through (0,10).
  const Sketch ccw{{Loop{{Line{{10, 0}}, Arc{{-10, 0}, 180, true}, Line{{0, 0}}}}}};
  CHECK(point_in_sketch(ccw, {0, 5}));
  CHECK_FALSE(point_in_sketch(ccw, {0, -5}));
  const Sketch cw{{Loop{{Line{{10, 0}}, Arc{{-10, 0}, 180, false}, Line{{0, 0}}}}}};
  CHECK(point_in_sketch(cw, {0, -5}));
  CHECK_FALSE(point_in_sketch(cw, {0, 5}));
}

TEST_CASE("even-odd combines loops") {
  const Sketch annulus{{circle_loop(0, 0, 20), circle_loop(0, 0, 10)}};
  CHECK(point_in_sketch(annulus, {15, 0}));
  CHECK_FALSE(point_in_sketch(annulus, {0, 0}));
  CHECK_FALSE(point_in_sketch(annulus, {25, 0}));
  const Sketch square{{rect_loop(10, 10)}};
  CHECK(point_in_sketch(square, {5, 5}));
  CHECK_FALSE(point_in_sketch(square, {15, 5}));
}

TEST_CASE("point in sketch agrees with a dense polygon oracle") {
  std::mt19937_64 rng(4);
  int decided = 0;
  for (int t = 0; t < 150; ++t) {
    Sketch s;
    const int loops = uniform(rng, 1, 3);
    for (int l = 0; l < loops; ++l) {
      s.loops.push_back(coin(rng, 0.3) ? circle_loop(uniform(rng, -60, 60), uniform(rng, -60, 60), uniform(rng, 1, 80))
                                       : random_chain(rng, true, 100));
    }
    const auto polys = polygonize(s);
    for (int q = 0; q < 60; ++q) {
      const Vec2 p{std::uniform_real_distribution<double>(-200, 200)(rng),
                   std::uniform_real_distribution<double>(-200, 200)(rng)};
      const auto expected = polygon_even_odd(polys, p);
      if (!expected) continue;
      ++decided;
      CHECK_MESSAGE(point_in_sketch(s, p) == *expected, "trial " << t << " point " << p.x << "," << p.y);
    }
  }
  CHECK(decided > 8000);
}

TEST_CASE("evaluate_model matches the brute-force oracle") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 15; ++t) {
    GenOptions o;
    o.max_pairs = 3;
    o.repeat_probability = 0;
    const CadModel m = random_model(rng, o);
    const VoxelSolid solid = evaluate_model(m, 24);
    CHECK(solid.occupancy == oracle_occupancy(m, solid.grid));
  }
}

TEST_CASE("box volume converges under refinement") {
  CadModel m;
  m.pairs.push_back(box_pair({-40, -40, -40}, 80, 60, 40));
  const double exact = 80.0 * 60 * 40 / (255.0 * 255 * 255);
  std::vector<double> errs;
  for (int res : {16, 64}) {
    const VoxelSolid s = evaluate_model(m, res);
    const double v = static_cast<double>(s.count()) * std::pow(s.grid.voxel, 3);
    errs.push_back(std::abs(v - exact) / exact);
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[1] < 0.1);
}

TEST_CASE("the grid holds the additive prisms with a margin") {
  const CadModel m = plate_with_hole();
  const VoxelSolid s = evaluate_model(m, 32);
  const Box b = prism_bounds(m.pairs[0]);
  const Box g = s.bounds();
  CHECK(g.min.x < b.min.x);
  CHECK(g.max.z > b.max.z);
  const int r = s.resolution();
  for (int j = 0; j < r; ++j) {
    for (int i = 0; i < r; ++i) {
      CHECK_FALSE(s.at(i, j, 0));
      CHECK_FALSE(s.at(i, j, r - 1));
    }
  }
}

TEST_CASE("cut removes the hole and intersect clips") {
  const CadModel m = plate_with_hole();
  const VoxelSolid with_hole = evaluate_model(m, 48);
  CadModel solid_only = m;
  solid_only.pairs.pop_back();
  const VoxelSolid plain = evaluate_on_grid(solid_only, with_hole.grid);
  CHECK(with_hole.count() < plain.count());

  CadModel clipped = solid_only;
  clipped.pairs.push_back(cylinder_pair({0, 0, -5}, 12, 30, BooleanOp::Intersect));
  const VoxelSolid core = evaluate_on_grid(clipped, with_hole.grid);
  CHECK(core.count() + with_hole.count() == plain.count());
}

TEST_CASE("surface samples stay on boundary voxels and are seeded") {
  const VoxelSolid s = evaluate_model(plate_with_hole(), 32);
  const auto a = sample_surface_points(s, 500, 9);
  const auto b = sample_surface_points(s, 500, 9);
  const auto c = sample_surface_points(s, 500, 10);
  CHECK(a == b);
  CHECK(a != c);
  const auto boundary = boundary_voxels(s);
  std::set<std::size_t> bset(boundary.begin(), boundary.end());
  for (const auto& p : a) {
    const int i = static_cast<int>(std::floor((p.x - s.grid.min.x) / s.grid.voxel));
    const int j = static_cast<int>(std::floor((p.y - s.grid.min.y) / s.grid.voxel));
    const int k = static_cast<int>(std::floor((p.z - s.grid.min.z) / s.grid.voxel));
    CHECK(bset.count(s.grid.index(i, j, k)) == 1);
  }
  VoxelSolid empty = s;
  std::fill(empty.occupancy.begin(), empty.occupancy.end(), 0);
  CHECK_THROWS_AS(sample_surface_points(empty, 10, 1), EmptinessError);
}

TEST_CASE("buildability") {
  CHECK(check_buildable(plate_with_hole(), 32).ok);
  CadModel gone = plate_with_hole();
  gone.pairs[1] = box_pair({-50, -50, -10}, 120, 120, 60, BooleanOp::Cut);
  const BuildCheck c = check_buildable(gone, 32);
  CHECK_FALSE(c.ok);
  CHECK(c.reason == "empty solid");
  CadModel bad = plate_with_hole();
  bad.pairs[0].extrude.op = BooleanOp::Cut;
  CHECK_FALSE(check_buildable(bad, 32).ok);
  CHECK_THROWS_AS(evaluate_model(bad, 32), ValidationError);
  CHECK_THROWS_AS(evaluate_model(plate_with_hole(), 3), DomainError);
}
