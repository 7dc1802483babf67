#include "spcc/model_json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "spcc/error.hpp"

namespace spcc {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw StructuralError(where + ": missing field '" + key + "'");
  return j.at(key);
}

int int_field(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number_integer()) throw StructuralError(where + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

Point2i point2(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw StructuralError(where + ": field '" + key + "' must be [x, y] integers");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

CurveCmd curve_from_json(const json& j, const std::string& where) {
  const json& t = field(j, "t", where);
  if (!t.is_string()) throw StructuralError(where + ": curve tag must be a string");
  const auto tag = t.get<std::string>();
  if (tag == "line") return Line{point2(j, "end", where)};
  if (tag == "arc") {
    const json& ccw = field(j, "ccw", where);
    if (!ccw.is_boolean()) throw StructuralError(where + ": field 'ccw' must be a boolean");
    return Arc{point2(j, "end", where), int_field(j, "sweep", where), ccw.get<bool>()};
  }
  if (tag == "circle") return Circle{point2(j, "center", where), int_field(j, "r", where)};
  throw StructuralError(where + ": unknown curve tag '" + tag + "'");
}

json curve_to_json(const CurveCmd& c) {
  if (const auto* line = std::get_if<Line>(&c)) return {{"t", "line"}, {"end", {line->end.x, line->end.y}}};
  if (const auto* arc = std::get_if<Arc>(&c)) {
    return {{"t", "arc"}, {"end", {arc->end.x, arc->end.y}}, {"sweep", arc->sweep}, {"ccw", arc->ccw}};
  }
  const auto& circle = std::get<Circle>(c);
  return {{"t", "circle"}, {"center", {circle.center.x, circle.center.y}}, {"r", circle.radius}};
}

ExtrudeCmd extrude_from_json(const json& j, const std::string& where) {
  ExtrudeCmd e;
  const json& orient = field(j, "orient", where);
  if (!orient.is_array() || orient.size() != 3) throw StructuralError(where + ": 'orient' must hold 3 angles");
  for (std::size_t i = 0; i < 3; ++i) {
    if (!orient[i].is_number_integer()) throw StructuralError(where + ": angles must be integers");
    e.orient[i] = orient[i].get<int>();
  }
  const json& origin = field(j, "origin", where);
  if (!origin.is_array() || origin.size() != 3) throw StructuralError(where + ": 'origin' must hold 3 integers");
  for (const auto& v : origin) {
    if (!v.is_number_integer()) throw StructuralError(where + ": origin must hold integers");
  }
  e.origin = {origin[0].get<int>(), origin[1].get<int>(), origin[2].get<int>()};
  const json& scale = field(j, "scale", where);
  if (!scale.is_number()) throw StructuralError(where + ": 'scale' must be a number");
  e.scale = scale.get<double>();
  e.dist1 = int_field(j, "dist1", where);
  e.dist2 = int_field(j, "dist2", where);
  const json& op = field(j, "boolean_op", where);
  const json& extent = field(j, "extent", where);
  if (!op.is_string() || !extent.is_string()) throw StructuralError(where + ": op and extent must be strings");
  e.op = boolean_op_from_string(op.get<std::string>());
  e.extent = extent_from_string(extent.get<std::string>());
  return e;
}

}  // namespace

BooleanOp boolean_op_from_string(const std::string& s) {
  for (auto op : {BooleanOp::NewBody, BooleanOp::Join, BooleanOp::Cut, BooleanOp::Intersect}) {
    if (s == to_string(op)) return op;
  }
  throw RangeError("op", "unknown boolean operation '" + s + "'");
}

ExtentType extent_from_string(const std::string& s) {
  for (auto e : {ExtentType::OneSided, ExtentType::Symmetric, ExtentType::TwoSided}) {
    if (s == to_string(e)) return e;
  }
  throw RangeError("extent", "unknown extent type '" + s + "'");
}

CadModel model_from_json(const json& j) {
  CadModel m;
  if (j.is_object() && j.contains("id")) {
    if (!j["id"].is_string()) throw StructuralError("model: 'id' must be a string");
    m.id = j["id"].get<std::string>();
  }
  const json& pairs = field(j, "pairs", "model");
  if (!pairs.is_array()) throw StructuralError("model: 'pairs' must be an array");
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const std::string where = "pair " + std::to_string(p + 1);
    SketchExtrudePair pair;
    const json& loops = field(field(pairs[p], "sketch", where), "loops", where);
    if (!loops.is_array()) throw StructuralError(where + ": 'loops' must be an array");
    for (std::size_t l = 0; l < loops.size(); ++l) {
      const std::string loop_where = where + ", loop " + std::to_string(l + 1);
      if (!loops[l].is_array()) throw StructuralError(loop_where + ": loop must be an array of curves");
      Loop loop;
      for (const auto& c : loops[l]) loop.curves.push_back(curve_from_json(c, loop_where));
      pair.sketch.loops.push_back(std::move(loop));
    }
    pair.extrude = extrude_from_json(field(pairs[p], "extrude", where), where);
    m.pairs.push_back(std::move(pair));
  }
  return m;
}

json model_to_json(const CadModel& m) {
  json pairs = json::array();
  for (const auto& pair : m.pairs) {
    json loops = json::array();
    for (const auto& loop : pair.sketch.loops) {
      json curves = json::array();
      for (const auto& c : loop.curves) curves.push_back(curve_to_json(c));
      loops.push_back(std::move(curves));
    }
    const ExtrudeCmd& e = pair.extrude;
    pairs.push_back({{"sketch", {{"loops", loops}}},
                     {"extrude",
                      {{"orient", e.orient},
                       {"origin", {e.origin.x, e.origin.y, e.origin.z}},
                       {"scale", e.scale},
                       {"dist1", e.dist1},
                       {"dist2", e.dist2},
                       {"boolean_op", to_string(e.op)},
                       {"extent", to_string(e.extent)}}}});
  }
  return {{"id", m.id}, {"pairs", pairs}};
}

Annotations annotations_from_json(const json& j) {
  Annotations a;
  if (!j.is_object()) throw StructuralError("annotations must be an object");
  if (j.contains("global") && !j["global"].is_null()) {
    const json& g = j["global"];
    a.global = GlobalAnnotation{field(g, "abstract", "annotations.global").get<std::string>(),
                                field(g, "detailed", "annotations.global").get<std::string>()};
  }
  if (j.contains("components")) {
    for (const auto& c : j["components"]) {
      a.components.push_back({c.value("name", std::string{}),
                              field(c, "description", "annotations.components").get<std::string>()});
    }
  }
  return a;
}

json annotations_to_json(const Annotations& a) {
  json out = json::object();
  out["global"] = a.global ? json{{"abstract", a.global->abstract_text}, {"detailed", a.global->detailed}}
                           : json(nullptr);
  json comps = json::array();
  for (const auto& c : a.components) comps.push_back({{"name", c.name}, {"description", c.description}});
  out["components"] = comps;
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

ModelFile load_model_file(const std::string& path) {
  const std::filesystem::path p(path);
  const std::string text = read_text_file(path);
  ModelFile out;
  if (p.extension() == ".json") {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw StructuralError(path + ": " + e.what());
    }
    out.model = model_from_json(j);
    if (out.model.id.empty()) out.model.id = p.stem().string();
    if (j.contains("annotations") && !j["annotations"].is_null()) {
      out.annotations = annotations_from_json(j["annotations"]);
    }
    return out;
  }
  // Code or SPCC text: take annotations when the document carries a full set.
  try {
    SpccDocument doc = parse(text);
    out.model = std::move(doc.model);
    if (doc.mode != DocMode::CodeOnly) out.annotations = std::move(doc.annotations);
  } catch (const StructuralError&) {
    out.model = parse_model(text);
  }
  out.model.id = p.stem().string();
  return out;
}

}  // namespace spcc
