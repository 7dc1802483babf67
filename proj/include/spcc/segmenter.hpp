#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "spcc/cad_model.hpp"

namespace spcc {

// A contiguous run of pairs annotated as one unit.
struct Component {
  std::size_t first = 0;  // index into CadModel::pairs
  std::size_t multiplicity = 1;

  std::size_t end() const { return first + multiplicity; }
  friend bool operator==(const Component&, const Component&) = default;
};

inline constexpr int kDefaultRepeatThreshold = 3;

// Ordered partition of the pairs. A maximal run of consecutive
// origin-equivalent pairs collapses into one component only when its length
// strictly exceeds `threshold`; every other pair is its own component.
std::vector<Component> segment(const CadModel& model, int threshold = kDefaultRepeatThreshold);

const SketchExtrudePair& representative(const CadModel& model, const Component& component);

// Model holding only the pairs of the given components, in order.
CadModel take_components(const CadModel& model, const std::vector<Component>& components,
                         const std::vector<std::size_t>& which);

// Model with one component's pairs removed.
CadModel remove_component(const CadModel& model, const std::vector<Component>& components,
                          std::size_t index);

enum class Direction { Up, Down, Left, Right, Front, Back };

const char* to_string(Direction d);

// World axis the extrusion normal points along, if one is within
// `tolerance_deg`. +Z up, -Z down, +X right, -X left, +Y back, -Y front.
std::optional<Direction> extrusion_direction_label(const SketchExtrudePair& pair,
                                                   double tolerance_deg = 5.0);

}  // namespace spcc
