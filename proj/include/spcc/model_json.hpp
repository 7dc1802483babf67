#pragma once

// JSON form of a model:
//   {"id": "...", "pairs": [{"sketch": {"loops": [[curve, ...], ...]},
//                            "extrude": {"orient": [t, p, g], "origin": [x, y, z],
//                                        "scale": s, "dist1": e1, "dist2": e2,
//                                        "boolean_op": "NewBody", "extent": "OneSided"}}],
//    "annotations": {...}}   // optional
// Curves: {"t":"line","end":[x,y]}, {"t":"arc","end":[x,y],"sweep":a,"ccw":b},
// {"t":"circle","center":[x,y],"r":r}.

#include <optional>
#include <string>

#include <json.hpp>

#include "spcc/cad_model.hpp"
#include "spcc/codec.hpp"

namespace spcc {

// Throws StructuralError on missing or mistyped fields. Range checks are left
// to validate_static.
CadModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const CadModel& model);

BooleanOp boolean_op_from_string(const std::string& s);
ExtentType extent_from_string(const std::string& s);

// {"global": {"abstract": ..., "detailed": ...}, "components": [{"name": ..., "description": ...}]}
Annotations annotations_from_json(const nlohmann::json& j);
nlohmann::json annotations_to_json(const Annotations& a);

struct ModelFile {
  CadModel model;
  std::optional<Annotations> annotations;
};

// Reads a .json model or a code/SPCC text file (anything else). Text files
// take their id from the file stem.
ModelFile load_model_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace spcc
