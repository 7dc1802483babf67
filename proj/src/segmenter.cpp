#include "spcc/segmenter.hpp"

#include <cmath>
#include <numbers>

#include "spcc/error.hpp"
#include "spcc/geometry.hpp"

namespace spcc {

std::vector<Component> segment(const CadModel& model, int threshold) {
  if (threshold < 1) throw DomainError("segment threshold must be at least 1");
  std::vector<Component> out;
  const auto& pairs = model.pairs;
  std::size_t i = 0;
  while (i < pairs.size()) {
    std::size_t j = i + 1;
    while (j < pairs.size() && pairs_equivalent_mod_origin(pairs[i], pairs[j])) ++j;
    const std::size_t run = j - i;
    if (run > static_cast<std::size_t>(threshold)) {
      out.push_back({i, run});
    } else {
      for (std::size_t k = i; k < j; ++k) out.push_back({k, 1});
    }
    i = j;
  }
  return out;
}

const SketchExtrudePair& representative(const CadModel& model, const Component& component) {
  return model.pairs.at(component.first);
}

CadModel take_components(const CadModel& model, const std::vector<Component>& components,
                         const std::vector<std::size_t>& which) {
  CadModel out;
  out.id = model.id;
  for (std::size_t c : which) {
    const auto& comp = components.at(c);
    for (std::size_t p = comp.first; p < comp.end(); ++p) out.pairs.push_back(model.pairs.at(p));
  }
  return out;
}

CadModel remove_component(const CadModel& model, const std::vector<Component>& components,
                          std::size_t index) {
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (c != index) keep.push_back(c);
  }
  return take_components(model, components, keep);
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
    case Direction::Front: return "front";
    case Direction::Back: return "back";
  }
  return "?";
}

std::optional<Direction> extrusion_direction_label(const SketchExtrudePair& pair,
                                                   double tolerance_deg) {
  const PlaneFrame frame = plane_frame(pair.extrude);
  struct Axis {
    Vec3 dir;
    Direction label;
  };
  static const Axis kAxes[] = {
      {{0, 0, 1}, Direction::Up},    {{0, 0, -1}, Direction::Down},
      {{1, 0, 0}, Direction::Right}, {{-1, 0, 0}, Direction::Left},
      {{0, 1, 0}, Direction::Back},  {{0, -1, 0}, Direction::Front},
  };
  const double cos_tol = std::cos(tolerance_deg * std::numbers::pi / 180.0);
  for (const auto& axis : kAxes) {
    if (dot(frame.n, axis.dir) >= cos_tol) return axis.label;
  }
  return std::nullopt;
}

}  // namespace spcc
