#pragma once

// Printer and parser for the code-like text form of a CadModel, optionally
// interleaved with hierarchical natural-language annotations.
//
//   # Description of the CAD model: <abstract>
//   # Details: <detailed>
//   # Component 1 (<name>): <description>
//   sketch_1 = Sketch()
//   loop1 = Loop()
//   loop1.Line(endpoint=(40,0))
//   ...
//   sketch_1.append(loop1)
//   extrude1 = Extrude(sketch_1,origin=(0,0,0),angles=(0,0,0),scale=1.000000,dist1=12,dist2=0,op=NewBody,extent=OneSided)
//   # End of code
//
// Sketch, loop and extrude counters are 1-based and run over the whole
// document. The printer only emits the dense argument form; the parser also
// accepts spaces around punctuation, CRLF line endings and blank lines.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spcc/cad_model.hpp"
#include "spcc/segmenter.hpp"

namespace spcc {

inline constexpr std::string_view kGlobalPrefix = "# Description of the CAD model: ";
inline constexpr std::string_view kDetailsPrefix = "# Details: ";
inline constexpr std::string_view kComponentPrefix = "# Component ";
inline constexpr std::string_view kEndOfCode = "# End of code";

// The prompt that opens every annotated document; also used to prompt
// unconditional generation.
inline constexpr std::string_view kUnconditionalPrompt = "Description of the CAD model";

struct ComponentAnnotation {
  std::string name;  // empty only for single-component documents
  std::string description;
  friend bool operator==(const ComponentAnnotation&, const ComponentAnnotation&) = default;
};

struct GlobalAnnotation {
  std::string abstract_text;
  std::string detailed;
  friend bool operator==(const GlobalAnnotation&, const GlobalAnnotation&) = default;
};

struct Annotations {
  std::optional<GlobalAnnotation> global;
  std::vector<ComponentAnnotation> components;
  friend bool operator==(const Annotations&, const Annotations&) = default;
};

// Tilde: abstract + detailed prefix. Dot: abstract prefix only.
// CodeOnly: no comment lines besides the terminator.
enum class DocMode { Tilde, Dot, CodeOnly };

const char* to_string(DocMode mode);
DocMode doc_mode_from_string(std::string_view name);

struct SpccDocument {
  Annotations annotations;
  std::vector<Component> components;
  CadModel model;
  DocMode mode = DocMode::CodeOnly;
  friend bool operator==(const SpccDocument&, const SpccDocument&) = default;
};

// Tilde and Dot print identically for single-component models; parse reports
// such documents as Tilde.
DocMode effective_mode(const CadModel& model, DocMode mode, int threshold = kDefaultRepeatThreshold);

// Code text without any validation. Used for hashing possibly-invalid models.
std::string format_code_unchecked(const CadModel& model);

// Throws ValidationError when validate_static reports violations.
std::string print_code(const CadModel& model);

// Throws StructuralError when the annotation count differs from the
// segmenter's component count or an annotation text is not a trimmed,
// non-empty single line.
std::string print_spcc(const CadModel& model, const Annotations& annotations, DocMode mode,
                       int threshold = kDefaultRepeatThreshold);

// Strict parse: component headers must agree with the segmenter output and
// the recovered model must validate. Throws LexicalError, StructuralError,
// RangeError or ValidationError.
SpccDocument parse(std::string_view text, int threshold = kDefaultRepeatThreshold);

// Model-only parse for evaluating generated text: annotation lines are
// ignored, everything else is checked as in parse.
CadModel parse_model(std::string_view text);

// Drops every annotation comment line, keeping the terminator.
std::string strip_annotations(std::string_view text);

// Trims and folds line breaks and runs of whitespace into single spaces so
// free text fits on one annotation line.
std::string sanitize_annotation_text(std::string_view text);

}  // namespace spcc
