#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spcc/cad_model.hpp"
#include "spcc/geometry.hpp"

namespace spcc {

struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;

  RasterImage() = default;
  RasterImage(int w, int h) : width(w), height(h), rgba(static_cast<std::size_t>(w) * h * 4, 255) {}

  std::uint8_t* pixel(int x, int y) { return &rgba[(static_cast<std::size_t>(y) * width + x) * 4]; }
  const std::uint8_t* pixel(int x, int y) const {
    return &rgba[(static_cast<std::size_t>(y) * width + x) * 4];
  }
  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

struct RenderOptions {
  int size = 448;
  int resolution = kDefaultResolution;
  unsigned jobs = 0;
};

inline constexpr double kDefaultOthersTransparency = 0.85;

// Orthographic view along (1, 1, 1) with +Z up, painter-ordered voxel faces.
// Without a highlight the folded solid is drawn opaque. With one, the other
// components keep opacity 1 - transparency and the highlighted component is
// drawn opaque; a highlighted Cut component is pure blue. Throws
// EmptinessError when the folded solid is empty.
RasterImage render_views(const CadModel& model, std::optional<std::size_t> highlight = std::nullopt,
                         double transparency_others = kDefaultOthersTransparency,
                         const RenderOptions& options = {});

// One component on its own (union of its prisms), framed like the whole model.
RasterImage render_component(const CadModel& model, std::size_t component,
                             const RenderOptions& options = {});

// Black strokes on white, fitted with a 5% margin.
RasterImage render_sketch(const Sketch& sketch, int size = 448);

std::vector<std::uint8_t> encode_png(const RasterImage& image);
void write_png(const RasterImage& image, const std::string& path);

}  // namespace spcc
