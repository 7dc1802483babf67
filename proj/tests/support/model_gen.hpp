#pragma once

// Random and hand-built models for tests.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spcc/cad_model.hpp"
#include "spcc/codec.hpp"
#include "spcc/segmenter.hpp"

namespace spcc::testing {

inline int uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline bool coin(std::mt19937_64& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

inline Loop rect_loop(int w, int h) {
  return Loop{{Line{{w, 0}}, Line{{w, h}}, Line{{0, h}}, Line{{0, 0}}}};
}

inline Loop circle_loop(int cx, int cy, int r) { return Loop{{Circle{{cx, cy}, r}}}; }

inline ExtrudeCmd extrude(Point3i origin, int dist1, BooleanOp op = BooleanOp::NewBody,
                          ExtentType extent = ExtentType::OneSided, std::array<int, 3> orient = {0, 0, 0},
                          double scale = 1.0, int dist2 = 0) {
  ExtrudeCmd e;
  e.orient = orient;
  e.origin = origin;
  e.scale = scale;
  e.dist1 = dist1;
  e.dist2 = dist2;
  e.op = op;
  e.extent = extent;
  return e;
}

// Axis-aligned w x h x d box with its minimum corner at `origin`.
inline SketchExtrudePair box_pair(Point3i origin, int w, int h, int d, BooleanOp op = BooleanOp::NewBody) {
  return {Sketch{{rect_loop(w, h)}}, extrude(origin, d, op)};
}

inline SketchExtrudePair cylinder_pair(Point3i origin, int r, int d, BooleanOp op = BooleanOp::NewBody) {
  return {Sketch{{circle_loop(0, 0, r)}}, extrude(origin, d, op)};
}

// Closed chain from (0, 0) with random lines and arcs.
inline Loop random_chain(std::mt19937_64& rng, bool allow_arcs, int span = 127) {
  Loop loop;
  const int n = uniform(rng, 2, 6);
  Point2i prev{0, 0};
  for (int i = 0; i < n; ++i) {
    Point2i end{0, 0};
    if (i + 1 < n) {
      do {
        end = {uniform(rng, -span, span), uniform(rng, -span, span)};
      } while (end == prev || end == Point2i{0, 0});
    }
    if (allow_arcs && coin(rng, 0.35)) {
      loop.curves.push_back(Arc{end, uniform(rng, 1, 359), coin(rng)});
    } else {
      loop.curves.push_back(Line{end});
    }
    prev = end;
  }
  return loop;
}

// Profiles that enclose area near the sketch origin.
inline Sketch random_profile(std::mt19937_64& rng, bool allow_arcs) {
  Sketch s;
  switch (uniform(rng, 0, allow_arcs ? 4 : 2)) {
    case 0:
      s.loops.push_back(rect_loop(uniform(rng, 10, 90), uniform(rng, 10, 90)));
      break;
    case 1:
      s.loops.push_back(circle_loop(uniform(rng, -20, 20), uniform(rng, -20, 20), uniform(rng, 5, 60)));
      break;
    case 2: {
      const int w = uniform(rng, 30, 90), h = uniform(rng, 30, 90);
      s.loops.push_back(rect_loop(w, h));
      s.loops.push_back(circle_loop(w / 2, h / 2, uniform(rng, 3, std::min(w, h) / 2 - 2)));
      break;
    }
    case 3: {
      // Rectangle whose right side bulges out as an arc.
      const int w = uniform(rng, 10, 80), h = uniform(rng, 10, 80);
      s.loops.push_back(Loop{{Line{{w, 0}}, Arc{{w, h}, uniform(rng, 30, 300), true}, Line{{0, h}}, Line{{0, 0}}}});
      break;
    }
    default: {
      const int w = uniform(rng, 20, 80), h = uniform(rng, 20, 80);
      s.loops.push_back(Loop{{Line{{w, 0}}, Line{{w, h}}, Arc{{0, h}, uniform(rng, 20, 180), coin(rng)}, Line{{0, 0}}}});
      break;
    }
  }
  return s;
}

inline std::array<int, 3> random_orient(std::mt19937_64& rng, bool axis_aligned) {
  if (axis_aligned) {
    static constexpr int kRight[] = {-180, -90, 0, 90, 180};
    return {kRight[uniform(rng, 0, 4)], kRight[uniform(rng, 0, 4)], kRight[uniform(rng, 0, 4)]};
  }
  return {uniform(rng, -180, 180), uniform(rng, -180, 180), uniform(rng, -180, 180)};
}

inline ExtrudeCmd random_extrude(std::mt19937_64& rng, BooleanOp op, bool axis_aligned) {
  ExtrudeCmd e;
  e.orient = random_orient(rng, axis_aligned);
  e.origin = {uniform(rng, -60, 60), uniform(rng, -60, 60), uniform(rng, -60, 60)};
  e.scale = uniform(rng, 200, 1500) / 1000.0;
  e.extent = static_cast<ExtentType>(uniform(rng, 0, 2));
  e.dist1 = uniform(rng, 1, 60);
  e.dist2 = e.extent == ExtentType::TwoSided ? uniform(rng, 0, 40) : 0;
  e.op = op;
  return e;
}

struct GenOptions {
  int max_pairs = 4;
  bool allow_arcs = true;
  bool axis_aligned = false;
  bool wild_chains = false;  // arbitrary closed chains instead of area-enclosing profiles
  double repeat_probability = 0.2;
};

inline CadModel random_model(std::mt19937_64& rng, const GenOptions& o = {}, std::string id = "m") {
  CadModel m;
  m.id = std::move(id);
  const int n = uniform(rng, 1, o.max_pairs);
  static constexpr BooleanOp kOps[] = {BooleanOp::Join, BooleanOp::Cut, BooleanOp::Intersect};
  while (static_cast<int>(m.pairs.size()) < n) {
    const BooleanOp op = m.pairs.empty() ? BooleanOp::NewBody : kOps[uniform(rng, 0, 2)];
    SketchExtrudePair pair;
    if (o.wild_chains) {
      const int loops = uniform(rng, 1, 3);
      for (int l = 0; l < loops; ++l) {
        pair.sketch.loops.push_back(coin(rng, 0.25) ? circle_loop(uniform(rng, -128, 127), uniform(rng, -128, 127),
                                                                   uniform(rng, 1, 255))
                                                     : random_chain(rng, o.allow_arcs));
      }
    } else {
      pair.sketch = random_profile(rng, o.allow_arcs);
    }
    pair.extrude = random_extrude(rng, op, o.axis_aligned);
    m.pairs.push_back(pair);
    // Occasionally repeat a non-initial pair at shifted origins to form a run.
    if (op != BooleanOp::NewBody && coin(rng, o.repeat_probability)) {
      const int extra = uniform(rng, 1, 4);
      for (int k = 0; k < extra; ++k) {
        SketchExtrudePair copy = pair;
        copy.extrude.origin.x = std::clamp(pair.extrude.origin.x + uniform(rng, -40, 40), -128, 127);
        copy.extrude.origin.y = std::clamp(pair.extrude.origin.y + uniform(rng, -40, 40), -128, 127);
        m.pairs.push_back(copy);
      }
    }
  }
  return m;
}

inline std::string random_words(std::mt19937_64& rng, int lo = 1, int hi = 8) {
  static const char* kWords[] = {"plate", "with", "a", "round", "hole", "bracket", "cylinder", "slot",
                                 "flange", "rib", "boss", "of", "the", "square", "thin", "wide"};
  std::string s;
  const int n = uniform(rng, lo, hi);
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += kWords[uniform(rng, 0, 15)];
  }
  return s;
}

inline Annotations random_annotations(std::mt19937_64& rng, const CadModel& m) {
  Annotations a;
  const auto comps = segment(m);
  if (comps.size() > 1) a.global = GlobalAnnotation{random_words(rng), random_words(rng, 3, 12)};
  for (std::size_t c = 0; c < comps.size(); ++c) {
    a.components.push_back({comps.size() > 1 || coin(rng) ? random_words(rng, 1, 3) : "", random_words(rng, 2, 10)});
  }
  return a;
}

// Solid plate with a later through-hole: the hole is the removable part.
inline CadModel plate_with_hole(std::string id = "plate") {
  CadModel m;
  m.id = std::move(id);
  m.pairs.push_back(box_pair({-40, -30, 0}, 80, 60, 15));
  m.pairs.push_back(cylinder_pair({0, 0, -5}, 12, 30, BooleanOp::Cut));
  return m;
}

// Base block with n identical pegs differing only in origin.
inline CadModel block_with_pegs(int n, std::string id = "pegs") {
  CadModel m;
  m.id = std::move(id);
  m.pairs.push_back(box_pair({-60, -60, 0}, 120, 120, 10));
  for (int i = 0; i < n; ++i) {
    m.pairs.push_back(cylinder_pair({-40 + 25 * i, 0, 10}, 8, 30, BooleanOp::Join));
  }
  return m;
}

}  // namespace spcc::testing
