#pragma once

// Voxel realization of sketch-extrude models.
//
// World space is the dequantized unit cube: the plane origin maps through
// dequantize(recenter=true), and sketch coordinates, radii and extrusion
// distances are quantization levels scaled by 1/255 (sketch coordinates are
// further multiplied by the profile scale).

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "spcc/cad_model.hpp"

namespace spcc {

struct Vec2 {
  double x = 0;
  double y = 0;
};

struct Vec3 {
  double x = 0;
  double y = 0;
  double z = 0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

using PointCloud = std::vector<Vec3>;

struct PlaneFrame {
  Vec3 origin;
  Vec3 u{1, 0, 0};  // sketch x axis
  Vec3 v{0, 1, 0};  // sketch y axis
  Vec3 n{0, 0, 1};  // extrusion normal
};

// Euler angles applied as Rz(theta) * Ry(phi) * Rx(gamma) to the identity
// frame, translated to the dequantized origin.
PlaneFrame plane_frame(const ExtrudeCmd& extrude);

inline constexpr double kLevelsPerUnit = 255.0;

// Circle through the arc's endpoints, derived from the start point, the
// endpoint and the signed sweep.
struct ArcGeometry {
  Vec2 center;
  double radius = 0;
  double start_angle = 0;   // radians
  double signed_sweep = 0;  // radians, positive counterclockwise
};

ArcGeometry arc_geometry(Point2i start, const Arc& arc);

// Even-odd membership over all loops, in sketch (quantization level) units.
bool point_in_sketch(const Sketch& sketch, Vec2 p);

struct SketchBounds {
  Vec2 min;
  Vec2 max;
};

// Conservative bounds: arcs contribute their whole supporting circle.
SketchBounds sketch_bounds(const Sketch& sketch);

// True when at least one cell center of a resolution x resolution lattice
// over the sketch bounds lies inside the region.
bool sketch_has_area(const Sketch& sketch, int resolution);

struct Box {
  Vec3 min;
  Vec3 max;
};

// Cubic voxel lattice. Voxel (i, j, k) has its center at
// min + ((i, j, k) + 0.5) * voxel.
struct GridSpec {
  int resolution = 64;
  Vec3 min;
  double voxel = 1.0;

  Vec3 center(int i, int j, int k) const {
    return {min.x + (i + 0.5) * voxel, min.y + (j + 0.5) * voxel, min.z + (k + 0.5) * voxel};
  }
  Box bounds() const {
    const double side = resolution * voxel;
    return {min, {min.x + side, min.y + side, min.z + side}};
  }
  std::size_t cell_count() const {
    const auto r = static_cast<std::size_t>(resolution);
    return r * r * r;
  }
  std::size_t index(int i, int j, int k) const {
    const auto r = static_cast<std::size_t>(resolution);
    return (static_cast<std::size_t>(k) * r + static_cast<std::size_t>(j)) * r +
           static_cast<std::size_t>(i);
  }
};

struct VoxelSolid {
  GridSpec grid;
  std::vector<std::uint8_t> occupancy;  // x fastest, then y, then z

  int resolution() const { return grid.resolution; }
  Box bounds() const { return grid.bounds(); }
  bool at(int i, int j, int k) const { return occupancy[grid.index(i, j, k)] != 0; }
  std::size_t count() const;
};

// Membership of a world point in one pair's extruded prism.
bool inside_prism(const SketchExtrudePair& pair, const PlaneFrame& frame, Vec3 p);

// Axis-aligned bounds of one pair's prism in world space.
Box prism_bounds(const SketchExtrudePair& pair);

// Cube around the additive (NewBody/Join) prisms with one voxel of margin.
GridSpec model_grid(const CadModel& model, int resolution);

// Per-voxel prism membership on the given grid.
std::vector<std::uint8_t> prism_mask(const SketchExtrudePair& pair, const GridSpec& grid,
                                     unsigned jobs = 0);

inline constexpr int kDefaultResolution = 64;

// Folds every pair into the occupancy in sequence order: NewBody and Join
// union, Cut subtracts, Intersect intersects. Throws ValidationError for
// models with static violations.
VoxelSolid evaluate_model(const CadModel& model, int resolution = kDefaultResolution,
                          unsigned jobs = 0);

// Same fold on a caller-provided grid.
VoxelSolid evaluate_on_grid(const CadModel& model, const GridSpec& grid, unsigned jobs = 0);

// Occupied voxels with at least one empty (or out-of-grid) 6-neighbour.
std::vector<std::size_t> boundary_voxels(const VoxelSolid& solid);

inline constexpr int kDefaultSampleCount = 2000;

// n boundary-voxel centers drawn uniformly with replacement, each jittered
// uniformly within half a voxel. Throws EmptinessError on an empty solid.
PointCloud sample_surface_points(const VoxelSolid& solid, int n, std::uint64_t seed);

struct BuildCheck {
  bool ok = false;
  std::string reason;
};

BuildCheck check_buildable(const CadModel& model, int resolution = kDefaultResolution,
                           unsigned jobs = 0);

}  // namespace spcc
