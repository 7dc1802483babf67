#include "spcc/annotator.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <sstream>

#include "spcc/digest.hpp"
#include "spcc/error.hpp"
#include "spcc/model_json.hpp"
#include "spcc/parallel.hpp"

namespace spcc {

using nlohmann::json;

const std::string_view kPrompt1Template =
    "Background: The user now has a CAD model, which is formed by extruding a sketch. "
    "User input: The user will input two pictures, the first is the sketch, and the second is the CAD model "
    "after the sketch is extruded. "
    "Task: Describe the CAD model. Please describe the sketch in detail first, include the additional "
    "information in the description and output the final description result as a single line. "
    "Additional information: {additional_information} "
    "Examples: {examples}";

const std::string_view kPrompt2Template =
    "A CAD model may consist of multiple modules. Each module constitutes a part of the model, which can be a "
    "solid or a feature used for cutting, such as creating a hole. The user has a CAD consisting of {num_parts} "
    "modules. The user will input {num_images} pictures, the first image is the original CAD model, followed by "
    "{num_parts} images where each module is rendered with enhanced highlighting. These modules collectively "
    "form the original CAD model. Modules used for cutting are highlighted in blue. The subsequent description "
    "explains each of the {num_parts} modules individually, following the order presented in the module images: "
    "{component_descriptions} "
    "Task: You need to output three lines, Line 1: A concise description of the overall macro of CAD based on "
    "first image. Line 2: A detailed description that includes the specific characteristics of each of the "
    "{num_parts} modules mentioned above, as well as the process by which they are assembled based on all "
    "provided images and component descriptions. Line 3: Short names for {num_parts} modules, separated by "
    "semicolons. "
    "Example: {examples}";

namespace {

void replace_all(std::string& s, std::string_view key, const std::string& value) {
  for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
    s.replace(pos, key.size(), value);
  }
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

void check_thresholds(const Thresholds& t) {
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] <= t[i - 1]) throw ConfigError("complexity thresholds must be strictly increasing");
  }
}

const char* direction_phrase(Direction d) {
  switch (d) {
    case Direction::Up: return "upwards";
    case Direction::Down: return "downwards";
    case Direction::Left: return "to the left";
    case Direction::Right: return "to the right";
    case Direction::Front: return "towards the front";
    case Direction::Back: return "towards the back";
  }
  return "";
}

// Component names end up inside "(...)" on header lines.
std::string clean_name(std::string_view raw) {
  std::string s(raw);
  for (char& c : s) {
    if (c == '(' || c == ')') c = ' ';
  }
  return sanitize_annotation_text(s);
}

std::vector<std::string> image_hashes(const std::vector<ChatMessage>& request) {
  std::vector<std::string> out;
  for (const auto& m : request) {
    for (const auto& part : m.content) {
      if (part.kind == ContentPart::Kind::Image) out.push_back(sha256_hex(part.png));
    }
  }
  return out;
}

// Sends a request, re-asking once when the reply fails to parse. Returns the
// parsed value or throws the last error.
template <typename Parse>
auto exchange(VlmClient& client, const std::vector<ChatMessage>& request, AnnotationOutcome& outcome, int stage,
              int component, Parse&& parse) {
  for (int attempt = 1;; ++attempt) {
    ExchangeRecord rec;
    rec.model_id = outcome.model_id;
    rec.stage = stage;
    rec.component = component;
    rec.attempt = attempt;
    rec.prompt = request_text(request);
    rec.image_sha256 = image_hashes(request);
    try {
      rec.response = client.complete(request);
      auto value = parse(rec.response);
      outcome.exchanges.push_back(std::move(rec));
      return value;
    } catch (const ResponseParseError& e) {
      rec.error = e.what();
      outcome.exchanges.push_back(std::move(rec));
      if (attempt >= 2) throw;
    } catch (const Error& e) {
      rec.error = e.what();
      outcome.exchanges.push_back(std::move(rec));
      throw;
    }
  }
}

}  // namespace

int complexity_level(std::size_t count, const Thresholds& thresholds) {
  check_thresholds(thresholds);
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (count <= static_cast<std::size_t>(std::max(thresholds[i], 0))) return static_cast<int>(i) + 1;
  }
  return kComplexityLevels;
}

int complexity_level(const CadModel& model, const Thresholds& thresholds) {
  return complexity_level(command_count(model), thresholds);
}

ExampleBank::ExampleBank(std::vector<Exemplar> exemplars) : exemplars_(std::move(exemplars)) {}

ExampleBank ExampleBank::parse_jsonl(std::string_view text) {
  std::vector<Exemplar> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      Exemplar e;
      e.level = j.at("level").get<int>();
      e.stage = j.at("prompt_stage").get<int>();
      e.input = j.at("exemplar_input").get<std::string>();
      e.output = j.at("exemplar_output").get<std::string>();
      if (e.level < 1 || e.level > kComplexityLevels) throw ConfigError("level out of range");
      if (e.stage != 1 && e.stage != 2) throw ConfigError("prompt_stage must be 1 or 2");
      out.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw ConfigError("example bank line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  ExampleBank bank(std::move(out));
  bank.validate();
  return bank;
}

ExampleBank ExampleBank::load(const std::string& path) { return parse_jsonl(read_text_file(path)); }

ExampleBank ExampleBank::builtin() {
  std::vector<Exemplar> ex;
  const char* stage1_out[] = {
      "A rectangular sketch is extruded upwards with an extrusion length of 20 units, forming a flat plate.",
      "A circular sketch is extruded upwards with an extrusion length of 40 units, forming a solid cylinder.",
  };
  const char* stage2_out[] = {
      "A flat plate with a round hole.\n"
      "A rectangular plate forms the base and a cylindrical cut passes through its center to make a hole.\n"
      "base plate; center hole",
      "A cylinder standing on a square block.\n"
      "A square block forms the base and a cylinder is joined on its top face, centered on the block.\n"
      "square block; top cylinder",
  };
  for (int level = 1; level <= kComplexityLevels; ++level) {
    for (int k = 0; k < 2; ++k) {
      ex.push_back({level, 1, "A sketch image and the extruded component image.", stage1_out[k]});
      ex.push_back({level, 2, "A model render, outline renders and component descriptions.", stage2_out[k]});
    }
  }
  return ExampleBank(std::move(ex));
}

void ExampleBank::validate() const {
  std::map<std::pair<int, int>, int> counts;
  for (const auto& e : exemplars_) ++counts[{e.level, e.stage}];
  for (int level = 1; level <= kComplexityLevels; ++level) {
    for (int stage = 1; stage <= 2; ++stage) {
      if (counts[{level, stage}] < 2) {
        throw ConfigError("example bank: level " + std::to_string(level) + " stage " + std::to_string(stage) +
                          " has fewer than two exemplars");
      }
    }
  }
}

std::array<Exemplar, 2> ExampleBank::pick(int level, int stage, std::uint64_t key) const {
  std::vector<const Exemplar*> pool;
  for (const auto& e : exemplars_) {
    if (e.level == level && e.stage == stage) pool.push_back(&e);
  }
  if (pool.size() < 2) {
    throw ConfigError("example bank: level " + std::to_string(level) + " stage " + std::to_string(stage) +
                      " has fewer than two exemplars");
  }
  const std::size_t n = pool.size();
  const std::size_t first = key % n;
  const std::size_t second = (first + 1 + (key / n) % (n - 1)) % n;
  return {*pool[first], *pool[second]};
}

Stage1Extras stage1_extras(const CadModel& model, const Component& component) {
  const SketchExtrudePair& pair = representative(model, component);
  Stage1Extras x;
  x.direction = extrusion_direction_label(pair);
  x.length = pair.extrude.extent == ExtentType::TwoSided ? pair.extrude.dist1 + pair.extrude.dist2
                                                         : pair.extrude.dist1;
  x.multiplicity = component.multiplicity;
  return x;
}

std::string additional_information(const Stage1Extras& x) {
  std::string s = "The sketch is extruded";
  if (x.direction) s += std::string(" ") + direction_phrase(*x.direction);
  s += " with an extrusion length of " + std::to_string(x.length) + " units.";
  if (x.multiplicity > 1) {
    s += " The component consists of " + std::to_string(x.multiplicity) + " identical sketch-extrude pairs.";
  }
  return s;
}

std::string format_examples(const std::array<Exemplar, 2>& examples) {
  std::string s;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    s += "\nExample " + std::to_string(i + 1) + ":\nInput: " + examples[i].input + "\nOutput: " + examples[i].output;
  }
  return s;
}

std::vector<ChatMessage> build_stage1_request(const Stage1Extras& extras, const std::vector<std::uint8_t>& sketch_png,
                                              const std::vector<std::uint8_t>& component_png,
                                              const std::array<Exemplar, 2>& examples) {
  std::string text(kPrompt1Template);
  replace_all(text, "{additional_information}", additional_information(extras));
  replace_all(text, "{examples}", format_examples(examples));
  ChatMessage msg;
  msg.content.push_back(ContentPart::of_text(std::move(text)));
  msg.content.push_back(ContentPart::of_image(sketch_png));
  msg.content.push_back(ContentPart::of_image(component_png));
  return {std::move(msg)};
}

std::vector<ChatMessage> build_stage2_request(std::size_t num_parts, const std::vector<std::string>& descriptions,
                                              const std::vector<std::uint8_t>& full_png,
                                              const std::vector<std::vector<std::uint8_t>>& outline_pngs,
                                              const std::array<Exemplar, 2>& examples) {
  if (descriptions.size() != num_parts || outline_pngs.size() != num_parts) {
    throw StructuralError("stage two expects " + std::to_string(num_parts) + " descriptions and outline images, got " +
                          std::to_string(descriptions.size()) + " and " + std::to_string(outline_pngs.size()));
  }
  std::string listing;
  for (std::size_t i = 0; i < descriptions.size(); ++i) {
    listing += "\nModule " + std::to_string(i + 1) + ": " + descriptions[i];
  }
  std::string text(kPrompt2Template);
  replace_all(text, "{num_parts}", std::to_string(num_parts));
  replace_all(text, "{num_images}", std::to_string(num_parts + 1));
  replace_all(text, "{component_descriptions}", listing);
  replace_all(text, "{examples}", format_examples(examples));
  ChatMessage msg;
  msg.content.push_back(ContentPart::of_text(std::move(text)));
  msg.content.push_back(ContentPart::of_image(full_png));
  for (const auto& png : outline_pngs) msg.content.push_back(ContentPart::of_image(png));
  return {std::move(msg)};
}

std::string parse_stage1_response(const std::string& text) {
  std::string s = sanitize_annotation_text(text);
  if (s.empty()) throw ResponseParseError("empty component description", text);
  return s;
}

Stage2Result parse_stage2_response(const std::string& text, std::size_t num_parts) {
  static const std::regex label(R"(^\s*line\s*[123]\s*[:.]\s*)", std::regex::icase);
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(std::regex_replace(line, label, ""));
    if (!t.empty()) lines.push_back(std::move(t));
  }
  if (lines.size() != 3) {
    throw ResponseParseError("expected 3 lines, got " + std::to_string(lines.size()), text);
  }
  Stage2Result r;
  r.abstract_text = sanitize_annotation_text(lines[0]);
  r.detailed = sanitize_annotation_text(lines[1]);
  std::istringstream names(lines[2]);
  std::string name;
  while (std::getline(names, name, ';')) {
    std::string n = clean_name(name);
    if (!n.empty()) r.names.push_back(std::move(n));
  }
  if (r.names.size() != num_parts) {
    throw ResponseParseError("name count " + std::to_string(r.names.size()) + " does not match " +
                                 std::to_string(num_parts) + " components",
                             text);
  }
  return r;
}

json exchange_to_json(const ExchangeRecord& r) {
  return {{"model_id", r.model_id}, {"stage", r.stage},       {"component", r.component},
          {"attempt", r.attempt},   {"prompt", r.prompt},     {"image_sha256", r.image_sha256},
          {"response", r.response}, {"error", r.error}};
}

AnnotationOutcome annotate_model(const CadModel& model, VlmClient& client, const ExampleBank& bank,
                                 const AnnotatorOptions& options) {
  AnnotationOutcome out;
  out.model_id = model.id;
  try {
    const auto components = segment(model);
    const int level = complexity_level(model, options.thresholds);
    const std::uint64_t key = stable_key(canonical_hash(model));

    std::vector<std::string> descriptions;
    for (std::size_t c = 0; c < components.size(); ++c) {
      const auto& pair = representative(model, components[c]);
      const auto request = build_stage1_request(
          stage1_extras(model, components[c]), encode_png(render_sketch(pair.sketch, options.render.size)),
          encode_png(render_component(model, c, options.render)), bank.pick(level, 1, key + c));
      descriptions.push_back(exchange(client, request, out, 1, static_cast<int>(c) + 1, parse_stage1_response));
    }

    if (components.size() == 1) {
      out.annotations.components.push_back({"", descriptions.front()});
    } else {
      std::vector<std::vector<std::uint8_t>> outlines;
      for (std::size_t c = 0; c < components.size(); ++c) {
        outlines.push_back(encode_png(render_views(model, c, kDefaultOthersTransparency, options.render)));
      }
      const auto request =
          build_stage2_request(components.size(), descriptions,
                               encode_png(render_views(model, std::nullopt, kDefaultOthersTransparency, options.render)),
                               outlines, bank.pick(level, 2, key));
      const Stage2Result s2 = exchange(client, request, out, 2, 0, [&](const std::string& text) {
        return parse_stage2_response(text, components.size());
      });
      out.annotations.global = GlobalAnnotation{s2.abstract_text, s2.detailed};
      for (std::size_t c = 0; c < components.size(); ++c) {
        out.annotations.components.push_back({s2.names[c], descriptions[c]});
      }
    }
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.annotations = {};
    out.failure = e.what();
  }
  return out;
}

std::vector<AnnotationOutcome> annotate_models(const std::vector<CadModel>& models, VlmClient& client,
                                               const ExampleBank& bank, const AnnotatorOptions& options) {
  std::vector<AnnotationOutcome> out(models.size());
  AnnotatorOptions per_model = options;
  per_model.render.jobs = 1;
  parallel_for(models.size(), std::max(1u, options.max_in_flight),
               [&](std::size_t i) { out[i] = annotate_model(models[i], client, bank, per_model); });
  return out;
}

std::string offline_annotation_reply(const std::vector<ChatMessage>& request) {
  const std::string text = request_text(request);
  static const std::regex parts(R"(consisting of (\d+) modules)");
  std::smatch m;
  if (text.find("You need to output three lines") != std::string::npos && std::regex_search(text, m, parts)) {
    const int n = std::stoi(m[1].str());
    std::string names;
    for (int i = 1; i <= n; ++i) names += (i > 1 ? "; " : "") + std::string("part ") + std::to_string(i);
    return "A CAD model assembled from " + std::to_string(n) + " parts.\n" + "The model is built from " +
           std::to_string(n) + " parts combined in sequence, each described above.\n" + names;
  }
  static const std::regex info(R"(Additional information: (.*?) Examples:)");
  if (std::regex_search(text, m, info)) return "A sketch profile. " + m[1].str();
  return "A sketch profile extruded into a solid.";
}

}  // namespace spcc
