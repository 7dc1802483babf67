#pragma once

// Two-stage hierarchical annotation: one description per component from its
// sketch and standalone render, then (for multi-component models) an abstract
// description, a detailed description and component names from the full
// render, the highlighted outline renders and the stage-one descriptions.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spcc/cad_model.hpp"
#include "spcc/codec.hpp"
#include "spcc/render.hpp"
#include "spcc/segmenter.hpp"
#include "spcc/services.hpp"

namespace spcc {

using Thresholds = std::array<int, 4>;
inline constexpr Thresholds kDefaultThresholds{10, 20, 35, 60};
inline constexpr int kComplexityLevels = 5;

// Bin of the model's command count: count <= t1 gives 1, ..., count > t4
// gives 5. Throws ConfigError unless the thresholds strictly increase.
int complexity_level(const CadModel& model, const Thresholds& thresholds = kDefaultThresholds);
int complexity_level(std::size_t command_count, const Thresholds& thresholds = kDefaultThresholds);

struct Exemplar {
  int level = 1;
  int stage = 1;
  std::string input;
  std::string output;
};

class ExampleBank {
 public:
  ExampleBank() = default;
  explicit ExampleBank(std::vector<Exemplar> exemplars);

  // JSONL with {level, prompt_stage, exemplar_input, exemplar_output} per line.
  static ExampleBank load(const std::string& path);
  static ExampleBank parse_jsonl(std::string_view text);
  // Small generic bank covering every level and stage.
  static ExampleBank builtin();

  // Throws ConfigError when some level/stage has fewer than two exemplars.
  void validate() const;

  // Two distinct exemplars of the level and stage, chosen by key.
  std::array<Exemplar, 2> pick(int level, int stage, std::uint64_t key) const;

  const std::vector<Exemplar>& exemplars() const { return exemplars_; }

 private:
  std::vector<Exemplar> exemplars_;
};

extern const std::string_view kPrompt1Template;
extern const std::string_view kPrompt2Template;

struct Stage1Extras {
  std::optional<Direction> direction;
  int length = 0;  // quantization levels along the normal
  std::size_t multiplicity = 1;
};

Stage1Extras stage1_extras(const CadModel& model, const Component& component);

// Direction and length sentence, plus a quantity sentence for repeated pairs.
std::string additional_information(const Stage1Extras& extras);

std::string format_examples(const std::array<Exemplar, 2>& examples);

// One user message: the filled template, then the sketch image, then the
// component render.
std::vector<ChatMessage> build_stage1_request(const Stage1Extras& extras, const std::vector<std::uint8_t>& sketch_png,
                                              const std::vector<std::uint8_t>& component_png,
                                              const std::array<Exemplar, 2>& examples);

// One user message: the filled template, the full-model image, then one
// outline image per component. Throws StructuralError when the description
// and outline counts disagree with num_parts.
std::vector<ChatMessage> build_stage2_request(std::size_t num_parts, const std::vector<std::string>& descriptions,
                                              const std::vector<std::uint8_t>& full_png,
                                              const std::vector<std::vector<std::uint8_t>>& outline_pngs,
                                              const std::array<Exemplar, 2>& examples);

// Sanitized single-line description. Throws ResponseParseError when empty.
std::string parse_stage1_response(const std::string& text);

struct Stage2Result {
  std::string abstract_text;
  std::string detailed;
  std::vector<std::string> names;
};

// Exactly three non-empty lines ("Line N:" labels are dropped); the third
// holds num_parts semicolon-separated names. Throws ResponseParseError.
Stage2Result parse_stage2_response(const std::string& text, std::size_t num_parts);

struct AnnotatorOptions {
  Thresholds thresholds = kDefaultThresholds;
  unsigned max_in_flight = 8;
  RenderOptions render;
};

struct ExchangeRecord {
  std::string model_id;
  int stage = 1;
  int component = 0;  // 1-based; 0 for stage two
  int attempt = 1;
  std::string prompt;
  std::vector<std::string> image_sha256;
  std::string response;
  std::string error;
};

nlohmann::json exchange_to_json(const ExchangeRecord& record);

struct AnnotationOutcome {
  std::string model_id;
  bool ok = false;
  Annotations annotations;
  std::string failure;  // reason for quarantine
  std::vector<ExchangeRecord> exchanges;
};

// Never throws for service or reply failures; those quarantine the model.
AnnotationOutcome annotate_model(const CadModel& model, VlmClient& client, const ExampleBank& bank,
                                 const AnnotatorOptions& options = {});

// Annotates every model with at most options.max_in_flight concurrent
// requests. Outcomes keep the input order.
std::vector<AnnotationOutcome> annotate_models(const std::vector<CadModel>& models, VlmClient& client,
                                               const ExampleBank& bank, const AnnotatorOptions& options = {});

// Deterministic replies for offline runs: a stage-one description built from
// the prompt's additional information, and a well-formed three-line stage-two
// reply with the requested number of names.
std::string offline_annotation_reply(const std::vector<ChatMessage>& request);

}  // namespace spcc
