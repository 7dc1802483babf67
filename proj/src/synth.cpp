#include "spcc/synth.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "spcc/annotator.hpp"
#include "spcc/digest.hpp"
#include "spcc/error.hpp"
#include "spcc/geometry.hpp"
#include "spcc/segmenter.hpp"

namespace spcc {

using nlohmann::json;

const std::string_view kJudgePromptTemplate =
    "The first image shows a CAD model made of {num_parts} components. The next {num_parts} images show the "
    "same model with one component highlighted in turn; components used for cutting are drawn in blue. "
    "Pick one component that can be removed so that the rest is still a sensible CAD model. Removing a solid "
    "while keeping a cutting component that depends on it is not acceptable. Answer with four lines:\n"
    "Index: <component number from 1 to {num_parts}>\n"
    "Reason: <why removing it is valid>\n"
    "Delete: <instruction asking to delete the component>\n"
    "Add: <instruction asking to add the component back>";

namespace {

std::vector<const AnnotatedModel*> sorted_by_id(const std::vector<AnnotatedModel>& models) {
  std::vector<const AnnotatedModel*> out;
  for (const auto& m : models) out.push_back(&m);
  std::stable_sort(out.begin(), out.end(),
                   [](const AnnotatedModel* a, const AnnotatedModel* b) { return a->model.id < b->model.id; });
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string_view> split_lines_keep(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
    out.push_back(text.substr(start, end - start));
    start = end;
  }
  return out;
}

std::string caption_text(const CadModel& model, const Annotations& a) {
  if (segment(model).size() == 1 || !a.global) return a.components.front().description;
  return a.global->abstract_text + " " + a.global->detailed;
}

bool usable_annotations(const CadModel& model, const std::optional<Annotations>& a) {
  if (!a || a->components.empty()) return false;
  try {
    print_spcc(model, *a, DocMode::Tilde);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::string component_label(const std::optional<Annotations>& a, std::size_t k) {
  std::string label = "component " + std::to_string(k + 1);
  if (a && k < a->components.size() && !a->components[k].name.empty()) {
    label += " (" + a->components[k].name + ")";
  }
  return label;
}

}  // namespace

const char* to_string(Task task) {
  switch (task) {
    case Task::Text2CAD: return "Text2CAD";
    case Task::Caption: return "Caption";
    case Task::Completion: return "Completion";
    case Task::Addition: return "Addition";
    case Task::AdditionStar: return "AdditionStar";
    case Task::Deletion: return "Deletion";
    case Task::DeletionStar: return "DeletionStar";
  }
  return "";
}

Task task_from_string(std::string_view name) {
  for (Task t : kAllTasks) {
    if (name == to_string(t)) return t;
  }
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

json record_to_json(const InstructionRecord& r) {
  json j = {{"task", to_string(r.task)},
            {"instruction", r.instruction},
            {"input", r.input},
            {"output", r.output},
            {"source_id", r.source_id}};
  if (!r.meta.empty()) j["meta"] = r.meta;
  return j;
}

InstructionRecord record_from_json(const json& j) {
  InstructionRecord r;
  r.task = task_from_string(j.at("task").get<std::string>());
  r.instruction = j.value("instruction", std::string{});
  r.input = j.at("input").get<std::string>();
  r.output = j.at("output").get<std::string>();
  r.source_id = j.at("source_id").get<std::string>();
  if (j.contains("meta")) r.meta = j["meta"].get<std::map<std::string, std::string>>();
  return r;
}

Corpus build_spcc_corpus(const std::vector<AnnotatedModel>& models) {
  Corpus corpus;
  for (const AnnotatedModel* m : sorted_by_id(models)) {
    if (!m->annotations) {
      corpus.skipped.push_back({m->model.id, "missing annotations"});
      continue;
    }
    try {
      const bool single = segment(m->model).size() == 1;
      corpus.docs.push_back({m->model.id + "_tilde", m->model.id, DocMode::Tilde,
                             print_spcc(m->model, *m->annotations, DocMode::Tilde)});
      if (!single) {
        corpus.docs.push_back(
            {m->model.id + "_dot", m->model.id, DocMode::Dot, print_spcc(m->model, *m->annotations, DocMode::Dot)});
      }
    } catch (const Error& e) {
      corpus.skipped.push_back({m->model.id, e.what()});
    }
  }
  return corpus;
}

std::vector<InstructionRecord> build_completion_records(const std::vector<CorpusDoc>& docs, RatioRange range,
                                                        std::uint64_t seed) {
  if (!(range.lo > 0 && range.lo <= range.hi && range.hi < 1)) {
    throw DomainError("completion ratio range must lie inside (0, 1)");
  }
  std::vector<InstructionRecord> out;
  for (const auto& doc : docs) {
    const auto lines = split_lines_keep(doc.text);
    const auto n = static_cast<double>(lines.size());
    std::mt19937_64 rng(seed ^ stable_key(doc.doc_id));
    const double r = std::uniform_real_distribution<double>(range.lo, range.hi)(rng);
    const long k_min = std::max(1L, static_cast<long>(std::ceil(range.lo * n - 1e-9)));
    const long k_max = std::min(static_cast<long>(lines.size()) - 1, static_cast<long>(std::floor(range.hi * n + 1e-9)));
    if (k_min > k_max) continue;
    const long k = std::clamp(std::lround(r * n), k_min, k_max);

    std::string prefix;
    for (long i = 0; i < k; ++i) prefix += lines[static_cast<std::size_t>(i)];
    InstructionRecord rec;
    rec.task = Task::Completion;
    rec.instruction = "Complete the following CAD code.";
    rec.input = std::move(prefix);
    rec.output = doc.text;
    rec.source_id = doc.source_id;
    rec.meta = {{"doc_id", doc.doc_id}, {"prefix_lines", std::to_string(k)}, {"mode", to_string(doc.mode)}};
    out.push_back(std::move(rec));
  }
  return out;
}

std::string removal_problem(const CadModel& model, std::size_t k, int resolution) {
  const auto components = segment(model);
  if (components.size() < 2) return "model has a single component";
  if (k >= components.size()) return "component index out of range";
  const CadModel rest = remove_component(model, components, k);
  if (rest.pairs.front().extrude.op != BooleanOp::NewBody) return "remainder does not start with NewBody";
  const BuildCheck check = check_buildable(rest, resolution);
  if (!check.ok) return "remainder is not buildable: " + check.reason;
  std::vector<std::size_t> sizes, expected;
  for (const auto& c : segment(rest)) sizes.push_back(c.multiplicity);
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (c != k) expected.push_back(components[c].multiplicity);
  }
  if (sizes != expected) return "remainder regroups into different components";
  return {};
}

std::string deletion_instruction(const std::optional<Annotations>& a, std::size_t k) {
  return "Delete " + component_label(a, k) + " from the CAD model.";
}

std::string addition_instruction(const std::optional<Annotations>& a, std::size_t k) {
  if (a && k < a->components.size()) {
    return "Add a new component to the CAD model: " + a->components[k].description;
  }
  return "Add back " + component_label(a, k) + " of the CAD model.";
}

std::optional<EditChoice> select_removable_heuristic(const CadModel& model, const std::optional<Annotations>& a,
                                                     int resolution) {
  const auto components = segment(model);
  for (std::size_t k = components.size(); k-- > 0;) {
    if (!removal_problem(model, k, resolution).empty()) continue;
    return EditChoice{k, deletion_instruction(a, k), addition_instruction(a, k),
                      "the remaining components still form a valid model"};
  }
  return std::nullopt;
}

std::vector<ChatMessage> build_judge_request(const CadModel& model, const RenderOptions& render) {
  const std::size_t n = segment(model).size();
  std::string text(kJudgePromptTemplate);
  const std::string count = std::to_string(n);
  for (std::size_t pos = text.find("{num_parts}"); pos != std::string::npos; pos = text.find("{num_parts}", pos)) {
    text.replace(pos, 11, count);
  }
  ChatMessage msg;
  msg.content.push_back(ContentPart::of_text(std::move(text)));
  msg.content.push_back(ContentPart::of_image(encode_png(render_views(model, std::nullopt, 0.85, render))));
  for (std::size_t c = 0; c < n; ++c) {
    msg.content.push_back(ContentPart::of_image(encode_png(render_views(model, c, 0.85, render))));
  }
  return {std::move(msg)};
}

EditChoice parse_judge_reply(const std::string& text, std::size_t component_count) {
  std::map<std::string, std::string> fields;
  std::istringstream in(text);
  std::string line;
  static const std::regex field(R"(^\s*(index|reason|delete|add)\s*:\s*(.*)$)", std::regex::icase);
  while (std::getline(in, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, field)) continue;
    std::string key = m[1].str();
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    fields[key] = trim(m[2].str());
  }
  for (const char* key : {"index", "reason", "delete", "add"}) {
    if (fields[key].empty()) throw ResponseParseError(std::string("judge reply lacks '") + key + "'", text);
  }
  const std::string& index = fields["index"];
  std::size_t k = 0;
  const auto [end, ec] = std::from_chars(index.data(), index.data() + index.size(), k);
  if (ec != std::errc{} || end != index.data() + index.size() || k < 1 || k > component_count) {
    throw ResponseParseError("judge index '" + index + "' is not a component number", text);
  }
  --k;
  return {k, sanitize_annotation_text(fields["delete"]), sanitize_annotation_text(fields["add"]),
          sanitize_annotation_text(fields["reason"])};
}

std::optional<EditChoice> select_removable_judge(const CadModel& model, VlmClient& client, const RenderOptions& render,
                                                 int resolution) {
  const std::size_t n = segment(model).size();
  if (n < 2) return std::nullopt;
  try {
    EditChoice choice = parse_judge_reply(client.complete(build_judge_request(model, render)), n);
    if (!removal_problem(model, choice.component, resolution).empty()) return std::nullopt;
    return choice;
  } catch (const Error&) {
    return std::nullopt;
  }
}

Annotations remove_annotation(const Annotations& a, std::size_t k) {
  Annotations out = a;
  out.components.erase(out.components.begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

std::vector<InstructionRecord> build_edit_records(const AnnotatedModel& m, const EditChoice& choice) {
  const auto components = segment(m.model);
  CadModel rest = remove_component(m.model, components, choice.component);
  rest.id = m.model.id;
  const std::string full = print_code(m.model);
  const std::string reduced = print_code(rest);
  const std::map<std::string, std::string> meta = {{"component", std::to_string(choice.component + 1)}};

  std::vector<InstructionRecord> out;
  out.push_back({Task::Deletion, choice.deletion_instruction, full, reduced, m.model.id, meta});
  out.push_back({Task::Addition, choice.addition_instruction, reduced, full, m.model.id, meta});
  if (m.annotations) {
    const std::string full_doc = print_spcc(m.model, *m.annotations, DocMode::Tilde);
    const std::string reduced_doc = print_spcc(rest, remove_annotation(*m.annotations, choice.component), DocMode::Tilde);
    out.push_back({Task::DeletionStar, choice.deletion_instruction, full_doc, reduced_doc, m.model.id, meta});
    out.push_back({Task::AdditionStar, choice.addition_instruction, reduced_doc, full_doc, m.model.id, meta});
  }
  return out;
}

InstructionDataset build_instruction_dataset(const std::vector<AnnotatedModel>& models,
                                             const InstructionOptions& options) {
  InstructionDataset ds;
  std::map<Task, std::vector<InstructionRecord>> by_task;

  std::vector<AnnotatedModel> usable;
  for (const AnnotatedModel* m : sorted_by_id(models)) {
    if (!validate_static(m->model).empty()) {
      ds.skipped.push_back({m->model.id, "invalid model"});
      continue;
    }
    AnnotatedModel copy = *m;
    if (!usable_annotations(copy.model, copy.annotations)) copy.annotations.reset();
    usable.push_back(std::move(copy));
  }

  for (const auto& m : usable) {
    const std::string code = print_code(m.model);
    if (m.annotations) {
      const std::string caption = caption_text(m.model, *m.annotations);
      by_task[Task::Text2CAD].push_back(
          {Task::Text2CAD, "Generate the CAD code for the following description.", caption, code, m.model.id, {}});
      by_task[Task::Caption].push_back(
          {Task::Caption, "Describe the CAD model given by the following code.", code, caption, m.model.id, {}});
    } else {
      ds.skipped.push_back({m.model.id, "no annotations; text tasks skipped"});
    }

    if (segment(m.model).size() < 2) continue;
    std::optional<EditChoice> choice;
    if (options.judge == JudgeMode::Vlm) {
      if (!options.judge_client) throw ConfigError("judge mode vlm needs a client");
      choice = select_removable_judge(m.model, *options.judge_client, options.render, options.resolution);
    } else {
      choice = select_removable_heuristic(m.model, m.annotations, options.resolution);
    }
    if (!choice) {
      ds.skipped.push_back({m.model.id, "no removable component"});
      continue;
    }
    for (auto& rec : build_edit_records(m, *choice)) by_task[rec.task].push_back(std::move(rec));
  }

  std::vector<AnnotatedModel> annotated;
  for (const auto& m : usable) {
    if (m.annotations) annotated.push_back(m);
  }
  by_task[Task::Completion] = build_completion_records(build_spcc_corpus(annotated).docs, options.completion_range,
                                                       options.seed);

  for (Task task : kAllTasks) {
    auto& recs = by_task[task];
    if (options.quota > 0 && recs.size() > options.quota) {
      auto key = [&](const InstructionRecord& r) {
        const auto doc = r.meta.count("doc_id") ? r.meta.at("doc_id") : r.source_id;
        return stable_key(std::to_string(options.seed) + ":" + to_string(task) + ":" + doc);
      };
      std::stable_sort(recs.begin(), recs.end(),
                       [&](const InstructionRecord& a, const InstructionRecord& b) { return key(a) < key(b); });
      recs.resize(options.quota);
      std::stable_sort(recs.begin(), recs.end(), [](const InstructionRecord& a, const InstructionRecord& b) {
        if (a.source_id != b.source_id) return a.source_id < b.source_id;
        const auto da = a.meta.count("doc_id") ? a.meta.at("doc_id") : "";
        const auto db = b.meta.count("doc_id") ? b.meta.at("doc_id") : "";
        return da < db;
      });
    }
    ds.counts[task] = recs.size();
    for (auto& r : recs) ds.records.push_back(std::move(r));
  }
  return ds;
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DomainError("embedding dimensions differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return dot / std::sqrt(na * nb);
}

Grouping group_contexts(const std::vector<EmbeddedDoc>& docs, std::size_t window, std::size_t neighbors) {
  if (window == 0) throw DomainError("context window must be positive");
  const std::size_t n = docs.size();
  Grouping g;
  if (n == 0) return g;

  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sim[i][j] = sim[j][i] = cosine_similarity(docs[i].embedding, docs[j].embedding);
  }
  auto more_similar = [&](std::size_t from) {
    return [&, from](std::size_t a, std::size_t b) {
      if (sim[from][a] != sim[from][b]) return sim[from][a] > sim[from][b];
      return a < b;
    };
  };
  std::vector<std::vector<std::size_t>> knn(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back(j);
    }
    const std::size_t k = std::min(neighbors, others.size());
    std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k), others.end(), more_similar(i));
    others.resize(k);
    knn[i] = std::move(others);
  }

  std::vector<bool> visited(n, false);
  std::size_t cur = 0;
  for (;;) {
    visited[cur] = true;
    g.order.push_back(cur);
    if (g.order.size() == n) break;
    std::optional<std::size_t> next;
    for (std::size_t j : knn[cur]) {
      if (!visited[j]) {
        next = j;
        break;
      }
    }
    if (!next) {
      const auto better = more_similar(cur);
      for (std::size_t j = 0; j < n; ++j) {
        if (!visited[j] && (!next || better(j, *next))) next = j;
      }
    }
    cur = *next;
  }

  PackedContext open;
  for (std::size_t idx : g.order) {
    const std::size_t t = docs[idx].token_count;
    if (t > window) {
      g.warnings.push_back("document " + docs[idx].doc_id + " has " + std::to_string(t) +
                           " tokens, more than the window of " + std::to_string(window));
      if (!open.members.empty()) g.contexts.push_back(std::exchange(open, {}));
      g.contexts.push_back({{idx}, t});
      continue;
    }
    if (open.tokens + t > window && !open.members.empty()) g.contexts.push_back(std::exchange(open, {}));
    open.members.push_back(idx);
    open.tokens += t;
  }
  if (!open.members.empty()) g.contexts.push_back(std::move(open));
  return g;
}

bool is_trivial(const CadModel& model) {
  if (model.pairs.size() != 1) return false;
  const Sketch& s = model.pairs.front().sketch;
  if (s.loops.size() > 1) return false;
  std::size_t curves = 0;
  for (const auto& loop : s.loops) curves += loop.curves.size();
  return curves <= 4;
}

DedupResult dedup_corpus(const std::vector<CadModel>& models) {
  DedupResult r;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (is_trivial(models[i])) {
      r.removed.push_back({models[i].id, "trivial model"});
      continue;
    }
    if (!seen.insert(canonical_hash(models[i])).second) {
      r.removed.push_back({models[i].id, "duplicate"});
      continue;
    }
    r.kept.push_back(i);
  }
  return r;
}

std::string offline_vlm_reply(const std::vector<ChatMessage>& request) {
  const std::string text = request_text(request);
  static const std::regex judge(R"(Index: <component number from 1 to (\d+)>)");
  std::smatch m;
  if (std::regex_search(text, m, judge)) {
    const std::string n = m[1].str();
    return "Index: " + n + "\nReason: the last component is a later feature and the rest stands on its own.\n" +
           "Delete: Delete component " + n + " from the CAD model.\n" + "Add: Add component " + n +
           " back to the CAD model.";
  }
  return offline_annotation_reply(request);
}

}  // namespace spcc
