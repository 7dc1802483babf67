#pragma once

// Corpus and instruction-dataset synthesis on top of annotated models.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spcc/cad_model.hpp"
#include "spcc/codec.hpp"
#include "spcc/render.hpp"
#include "spcc/services.hpp"

namespace spcc {

struct AnnotatedModel {
  CadModel model;
  std::optional<Annotations> annotations;
};

struct CorpusDoc {
  std::string doc_id;     // <model id>_tilde or <model id>_dot
  std::string source_id;  // model id
  DocMode mode = DocMode::Tilde;
  std::string text;
};

struct SkippedItem {
  std::string id;
  std::string reason;
};

struct Corpus {
  std::vector<CorpusDoc> docs;
  std::vector<SkippedItem> skipped;
};

// Two documents (Tilde, Dot) per multi-component model, one per
// single-component model. Models are visited in id order; models without a
// usable annotation set are skipped.
Corpus build_spcc_corpus(const std::vector<AnnotatedModel>& models);

enum class Task { Text2CAD, Caption, Completion, Addition, AdditionStar, Deletion, DeletionStar };

inline constexpr Task kAllTasks[] = {Task::Text2CAD,     Task::Caption,  Task::Completion,  Task::Addition,
                                     Task::AdditionStar, Task::Deletion, Task::DeletionStar};

const char* to_string(Task task);
Task task_from_string(std::string_view name);

struct InstructionRecord {
  Task task = Task::Text2CAD;
  std::string instruction;
  std::string input;
  std::string output;
  std::string source_id;
  std::map<std::string, std::string> meta;
};

nlohmann::json record_to_json(const InstructionRecord& record);
InstructionRecord record_from_json(const nlohmann::json& j);

struct RatioRange {
  double lo = 0.30;
  double hi = 0.50;
};

// Prefix of roughly r * L lines (r drawn uniformly from the range with a
// per-document seed) snapped so k / L stays inside the range and 1 <= k < L.
// Documents with no admissible k produce no record.
std::vector<InstructionRecord> build_completion_records(const std::vector<CorpusDoc>& docs, RatioRange range = {},
                                                        std::uint64_t seed = 0);

struct EditChoice {
  std::size_t component = 0;  // 0-based
  std::string deletion_instruction;
  std::string addition_instruction;
  std::string reason;
};

// Empty string when removing component k gives a usable remainder: starts
// with NewBody, is buildable and segments into the other components.
std::string removal_problem(const CadModel& model, std::size_t k, int resolution = 32);

std::string deletion_instruction(const std::optional<Annotations>& annotations, std::size_t k);
std::string addition_instruction(const std::optional<Annotations>& annotations, std::size_t k);

// Last component whose removal leaves a usable remainder.
std::optional<EditChoice> select_removable_heuristic(const CadModel& model, const std::optional<Annotations>& annotations,
                                                     int resolution = 32);

extern const std::string_view kJudgePromptTemplate;

std::vector<ChatMessage> build_judge_request(const CadModel& model, const RenderOptions& render = {});

// Reply lines "Index: <k>", "Reason: ...", "Delete: ...", "Add: ...", k 1-based.
EditChoice parse_judge_reply(const std::string& text, std::size_t component_count);

// Asks the service; a reply naming an unusable component (or failing to
// parse) excludes the model.
std::optional<EditChoice> select_removable_judge(const CadModel& model, VlmClient& client, const RenderOptions& render = {},
                                                 int resolution = 32);

// Deletion, Addition, DeletionStar and AdditionStar for one model.
std::vector<InstructionRecord> build_edit_records(const AnnotatedModel& model, const EditChoice& choice);

// Remainder annotations after dropping component k.
Annotations remove_annotation(const Annotations& annotations, std::size_t k);

enum class JudgeMode { Heuristic, Vlm };

struct InstructionOptions {
  std::size_t quota = 0;  // per task; 0 keeps everything
  std::uint64_t seed = 0;
  RatioRange completion_range;
  JudgeMode judge = JudgeMode::Heuristic;
  VlmClient* judge_client = nullptr;
  RenderOptions render;
  int resolution = 32;
};

struct InstructionDataset {
  std::vector<InstructionRecord> records;  // grouped by task, then source id
  std::vector<SkippedItem> skipped;
  std::map<Task, std::size_t> counts;
};

InstructionDataset build_instruction_dataset(const std::vector<AnnotatedModel>& models,
                                             const InstructionOptions& options = {});

struct EmbeddedDoc {
  std::string doc_id;
  std::vector<double> embedding;
  std::size_t token_count = 0;
};

using TokenEstimator = std::function<std::size_t(std::string_view)>;

// ceil(bytes / 4)
std::size_t estimate_tokens(std::string_view text);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

inline constexpr std::size_t kDefaultWindow = 2048;
inline constexpr std::size_t kDefaultNeighbors = 10;

struct PackedContext {
  std::vector<std::size_t> members;  // indices into the input docs, in order
  std::size_t tokens = 0;
};

struct Grouping {
  std::vector<std::size_t> order;  // traversal order
  std::vector<PackedContext> contexts;
  std::vector<std::string> warnings;
};

// Greedy walk over the cosine k-nearest-neighbour graph, starting from the
// first doc; when the current doc has no unvisited neighbour the walk jumps
// to the most similar unvisited doc. The walk is then cut into contexts of at
// most `window` tokens.
Grouping group_contexts(const std::vector<EmbeddedDoc>& docs, std::size_t window = kDefaultWindow,
                        std::size_t neighbors = kDefaultNeighbors);

// True when the model is a single pair with at most one loop and four curves.
bool is_trivial(const CadModel& model);

struct DedupResult {
  std::vector<std::size_t> kept;  // indices into the input
  std::vector<SkippedItem> removed;
};

DedupResult dedup_corpus(const std::vector<CadModel>& models);

// Offline reply for annotation and judge prompts.
std::string offline_vlm_reply(const std::vector<ChatMessage>& request);

}  // namespace spcc
