#include "spcc/render.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include "spcc/error.hpp"
#include "spcc/segmenter.hpp"

namespace spcc {

namespace {

struct Rgb {
  double r, g, b;
};

constexpr Rgb kSolidColor{0.75, 0.75, 0.75};
constexpr Rgb kHighlightColor{0.92, 0.55, 0.2};
constexpr Rgb kCutColor{0.0, 0.0, 1.0};

struct Layer {
  std::vector<std::uint8_t> voxels;
  Rgb color;
  double opacity;
  bool shaded;
};

struct Face {
  double depth;
  std::size_t order;  // emission order, breaks depth ties
  std::array<Vec3, 4> corners;
  Rgb color;
  double opacity;
};

// Premultiplied accumulation buffer composited with the "over" operator.
class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), color_(static_cast<std::size_t>(w) * h), alpha_(color_.size(), 0) {}

  void blend(int x, int y, Rgb c, double a) {
    const std::size_t i = static_cast<std::size_t>(y) * w_ + x;
    Rgb& dst = color_[i];
    dst = {c.r * a + dst.r * (1 - a), c.g * a + dst.g * (1 - a), c.b * a + dst.b * (1 - a)};
    alpha_[i] = a + alpha_[i] * (1 - a);
  }

  RasterImage resolve() const {
    RasterImage img(w_, h_);
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w_ + x;
        std::uint8_t* px = img.pixel(x, y);
        if (alpha_[i] <= 0) continue;  // white, opaque background
        const double a = alpha_[i];
        px[0] = to_byte(color_[i].r / a);
        px[1] = to_byte(color_[i].g / a);
        px[2] = to_byte(color_[i].b / a);
        px[3] = to_byte(a);
      }
    }
    return img;
  }

 private:
  static std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  }

  int w_, h_;
  std::vector<Rgb> color_;
  std::vector<double> alpha_;
};

struct Camera {
  Vec3 toward{1 / std::numbers::sqrt3, 1 / std::numbers::sqrt3, 1 / std::numbers::sqrt3};
  Vec3 right{-1 / std::numbers::sqrt2, 1 / std::numbers::sqrt2, 0};
  Vec3 up{-1 / (std::numbers::sqrt2 * std::numbers::sqrt3), -1 / (std::numbers::sqrt2 * std::numbers::sqrt3),
          2 / (std::numbers::sqrt2 * std::numbers::sqrt3)};
  double cx = 0, cy = 0, scale = 1;
  int size = 448;

  Camera(const Box& box, int image_size) : size(image_size) {
    double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
    for (int c = 0; c < 8; ++c) {
      const Vec3 p{(c & 1) ? box.max.x : box.min.x, (c & 2) ? box.max.y : box.min.y,
                   (c & 4) ? box.max.z : box.min.z};
      lo_x = std::min(lo_x, dot(p, right));
      hi_x = std::max(hi_x, dot(p, right));
      lo_y = std::min(lo_y, dot(p, up));
      hi_y = std::max(hi_y, dot(p, up));
    }
    cx = 0.5 * (lo_x + hi_x);
    cy = 0.5 * (lo_y + hi_y);
    scale = 0.9 * size / std::max(hi_x - lo_x, hi_y - lo_y);
  }

  Vec2 project(Vec3 p) const {
    return {(dot(p, right) - cx) * scale + 0.5 * size, 0.5 * size - (dot(p, up) - cy) * scale};
  }
};

double edge(Vec2 a, Vec2 b, double x, double y) { return (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x); }

void fill_quad(Canvas& canvas, const Camera& cam, const Face& f) {
  std::array<Vec2, 4> q;
  for (int i = 0; i < 4; ++i) q[static_cast<std::size_t>(i)] = cam.project(f.corners[static_cast<std::size_t>(i)]);
  double lo_x = q[0].x, hi_x = q[0].x, lo_y = q[0].y, hi_y = q[0].y;
  for (const auto& p : q) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(lo_x)));
  const int x1 = std::min(cam.size - 1, static_cast<int>(std::ceil(hi_x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(lo_y)));
  const int y1 = std::min(cam.size - 1, static_cast<int>(std::ceil(hi_y)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      bool pos = true, neg = true;
      for (int e = 0; e < 4; ++e) {
        const double v = edge(q[static_cast<std::size_t>(e)], q[static_cast<std::size_t>((e + 1) % 4)], px, py);
        pos = pos && v >= 0;
        neg = neg && v <= 0;
      }
      if (pos || neg) canvas.blend(x, y, f.color, f.opacity);
    }
  }
}

// Emits the +X, +Y and +Z faces (the ones facing the camera) of every voxel
// whose neighbour in that direction is empty within the same layer.
void emit_faces(const GridSpec& grid, const Layer& layer, const Camera& cam, std::vector<Face>& out) {
  const int r = grid.resolution;
  const double h = grid.voxel;
  auto filled = [&](int i, int j, int k) {
    if (i >= r || j >= r || k >= r) return false;
    return layer.voxels[grid.index(i, j, k)] != 0;
  };
  for (int k = 0; k < r; ++k) {
    for (int j = 0; j < r; ++j) {
      for (int i = 0; i < r; ++i) {
        if (!filled(i, j, k)) continue;
        const Vec3 lo{grid.min.x + i * h, grid.min.y + j * h, grid.min.z + k * h};
        const Vec3 hi{lo.x + h, lo.y + h, lo.z + h};
        auto push = [&](std::array<Vec3, 4> corners, double shade) {
          const Vec3 mid = (corners[0] + corners[2]) * 0.5;
          Rgb c = layer.color;
          if (layer.shaded) c = {c.r * shade, c.g * shade, c.b * shade};
          out.push_back({dot(mid, cam.toward), out.size(), corners, c, layer.opacity});
        };
        if (!filled(i + 1, j, k)) {
          push({Vec3{hi.x, lo.y, lo.z}, Vec3{hi.x, hi.y, lo.z}, Vec3{hi.x, hi.y, hi.z}, Vec3{hi.x, lo.y, hi.z}}, 0.72);
        }
        if (!filled(i, j + 1, k)) {
          push({Vec3{lo.x, hi.y, lo.z}, Vec3{hi.x, hi.y, lo.z}, Vec3{hi.x, hi.y, hi.z}, Vec3{lo.x, hi.y, hi.z}}, 0.86);
        }
        if (!filled(i, j, k + 1)) {
          push({Vec3{lo.x, lo.y, hi.z}, Vec3{hi.x, lo.y, hi.z}, Vec3{hi.x, hi.y, hi.z}, Vec3{lo.x, hi.y, hi.z}}, 1.0);
        }
      }
    }
  }
}

RasterImage draw_layers(const GridSpec& grid, const std::vector<Layer>& layers, int size) {
  const Camera cam(grid.bounds(), size);
  std::vector<Face> faces;
  for (const auto& layer : layers) emit_faces(grid, layer, cam, faces);
  std::sort(faces.begin(), faces.end(), [](const Face& a, const Face& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.order < b.order;
  });
  Canvas canvas(size, size);
  for (const auto& f : faces) fill_quad(canvas, cam, f);
  return canvas.resolve();
}

std::vector<std::uint8_t> component_union(const CadModel& model, const Component& comp, const GridSpec& grid,
                                          unsigned jobs) {
  std::vector<std::uint8_t> acc(grid.cell_count(), 0);
  for (std::size_t p = comp.first; p < comp.end(); ++p) {
    const auto mask = prism_mask(model.pairs[p], grid, jobs);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] |= mask[i];
  }
  return acc;
}

bool additive(BooleanOp op) { return op == BooleanOp::NewBody || op == BooleanOp::Join; }

void stroke_segment(RasterImage& img, Vec2 a, Vec2 b, double half_width) {
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - half_width)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + half_width)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - half_width)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + half_width)));
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double t = len2 > 0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = a.x + t * dx - px, ey = a.y + t * dy - py;
      if (ex * ex + ey * ey <= half_width * half_width) {
        std::uint8_t* p = img.pixel(x, y);
        p[0] = p[1] = p[2] = 0;
        p[3] = 255;
      }
    }
  }
}

std::vector<std::vector<Vec2>> sketch_polylines(const Sketch& sketch) {
  std::vector<std::vector<Vec2>> out;
  for (const auto& loop : sketch.loops) {
    std::vector<Vec2> poly;
    if (loop.curves.size() == 1 && std::holds_alternative<Circle>(loop.curves.front())) {
      const auto& c = std::get<Circle>(loop.curves.front());
      for (int s = 0; s <= 180; ++s) {
        const double a = 2 * std::numbers::pi * s / 180;
        poly.push_back({c.center.x + c.radius * std::cos(a), c.center.y + c.radius * std::sin(a)});
      }
      out.push_back(std::move(poly));
      continue;
    }
    Point2i prev{0, 0};
    poly.push_back({0, 0});
    for (const auto& curve : loop.curves) {
      if (const auto* line = std::get_if<Line>(&curve)) {
        poly.push_back({static_cast<double>(line->end.x), static_cast<double>(line->end.y)});
        prev = line->end;
      } else if (const auto* arc = std::get_if<Arc>(&curve)) {
        const ArcGeometry g = arc_geometry(prev, *arc);
        const int steps = std::max(2, static_cast<int>(std::ceil(std::abs(g.signed_sweep) / (std::numbers::pi / 90))));
        for (int s = 1; s < steps; ++s) {
          const double a = g.start_angle + g.signed_sweep * s / steps;
          poly.push_back({g.center.x + g.radius * std::cos(a), g.center.y + g.radius * std::sin(a)});
        }
        poly.push_back({static_cast<double>(arc->end.x), static_cast<double>(arc->end.y)});
        prev = arc->end;
      }
    }
    out.push_back(std::move(poly));
  }
  return out;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

}  // namespace

RasterImage render_views(const CadModel& model, std::optional<std::size_t> highlight,
                         double transparency_others, const RenderOptions& options) {
  if (!(transparency_others >= 0.0 && transparency_others <= 1.0)) {
    throw DomainError("transparency must lie in [0, 1]");
  }
  const VoxelSolid solid = evaluate_model(model, options.resolution, options.jobs);
  if (solid.count() == 0) throw EmptinessError("model realizes an empty solid");
  const GridSpec& grid = solid.grid;

  if (!highlight) {
    return draw_layers(grid, {Layer{solid.occupancy, kSolidColor, 1.0, true}}, options.size);
  }

  const auto components = segment(model);
  if (*highlight >= components.size()) {
    throw DomainError("highlight index " + std::to_string(*highlight) + " out of range for " +
                      std::to_string(components.size()) + " components");
  }
  const Component& comp = components[*highlight];
  const BooleanOp op = model.pairs[comp.first].extrude.op;
  std::vector<std::uint8_t> target = component_union(model, comp, grid, options.jobs);
  if (additive(op)) {
    for (std::size_t i = 0; i < target.size(); ++i) target[i] &= solid.occupancy[i];
  }
  std::vector<std::uint8_t> others = solid.occupancy;
  for (std::size_t i = 0; i < others.size(); ++i) others[i] &= target[i] ^ 1;

  const bool cut = op == BooleanOp::Cut;
  return draw_layers(grid,
                     {Layer{std::move(others), kSolidColor, 1.0 - transparency_others, true},
                      Layer{std::move(target), cut ? kCutColor : kHighlightColor, 1.0, !cut}},
                     options.size);
}

RasterImage render_component(const CadModel& model, std::size_t component, const RenderOptions& options) {
  const auto components = segment(model);
  if (component >= components.size()) {
    throw DomainError("component index " + std::to_string(component) + " out of range");
  }
  const GridSpec grid = model_grid(model, options.resolution);
  const Component& comp = components[component];
  auto voxels = component_union(model, comp, grid, options.jobs);
  if (std::find(voxels.begin(), voxels.end(), std::uint8_t{1}) == voxels.end()) {
    throw EmptinessError("component " + std::to_string(component + 1) + " has no volume");
  }
  const bool cut = model.pairs[comp.first].extrude.op == BooleanOp::Cut;
  return draw_layers(grid, {Layer{std::move(voxels), cut ? kCutColor : kSolidColor, 1.0, !cut}},
                     options.size);
}

RasterImage render_sketch(const Sketch& sketch, int size) {
  RasterImage img(size, size);
  const auto polylines = sketch_polylines(sketch);
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (const auto& poly : polylines) {
    for (const auto& p : poly) {
      lo_x = std::min(lo_x, p.x);
      hi_x = std::max(hi_x, p.x);
      lo_y = std::min(lo_y, p.y);
      hi_y = std::max(hi_y, p.y);
    }
  }
  if (polylines.empty() || lo_x > hi_x) return img;

  constexpr double kHalfWidth = 1.5;
  const double margin = 0.05 * size + kHalfWidth;
  const double extent = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
  const double scale = (size - 2 * margin) / extent;
  const double cx = 0.5 * (lo_x + hi_x), cy = 0.5 * (lo_y + hi_y);
  auto map = [&](Vec2 p) { return Vec2{(p.x - cx) * scale + 0.5 * size, 0.5 * size - (p.y - cy) * scale}; };

  for (const auto& poly : polylines) {
    for (std::size_t i = 0; i + 1 < poly.size(); ++i) stroke_segment(img, map(poly[i]), map(poly[i + 1]), kHalfWidth);
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const RasterImage& image) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw Error("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_vector, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.pixel(0, y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const RasterImage& image, const std::string& path) {
  const auto bytes = encode_png(image);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace spcc
