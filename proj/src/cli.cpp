#include "spcc/cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "spcc/annotator.hpp"
#include "spcc/codec.hpp"
#include "spcc/error.hpp"
#include "spcc/geometry.hpp"
#include "spcc/metrics.hpp"
#include "spcc/model_json.hpp"
#include "spcc/parallel.hpp"
#include "spcc/render.hpp"
#include "spcc/segmenter.hpp"
#include "spcc/services.hpp"
#include "spcc/synth.hpp"

namespace spcc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kModelExtensions = {".json", ".txt", ".spcc", ".cad", ".py"};

std::vector<fs::path> model_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError(dir + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (std::find(kModelExtensions.begin(), kModelExtensions.end(), ext) != kModelExtensions.end()) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct LoadedItem {
  fs::path path;
  std::optional<ModelFile> file;
  std::string error;
};

std::vector<LoadedItem> load_dir(const std::string& dir) {
  std::vector<LoadedItem> items;
  for (const auto& p : model_files(dir)) {
    LoadedItem item{p, std::nullopt, {}};
    try {
      item.file = load_model_file(p.string());
    } catch (const Error& e) {
      item.error = e.what();
      spdlog::warn("{}: {}", p.string(), e.what());
    }
    items.push_back(std::move(item));
  }
  return items;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory " + dir + ": " + ec.message());
}

std::shared_ptr<VlmClient> make_vlm(const std::string& kind) {
  if (kind == "remote") {
    return std::make_shared<RetryingVlmClient>(
        std::make_shared<HttpVlmClient>(endpoint_from_env("SPCC_VLM", "gpt-4o")));
  }
  return std::make_shared<MockVlmClient>(offline_vlm_reply);
}

std::unique_ptr<EmbeddingClient> make_embedder(const std::string& kind) {
  if (kind == "remote") {
    return std::make_unique<HttpEmbeddingClient>(endpoint_from_env("SPCC_EMBED", "clip"));
  }
  return std::make_unique<MockEmbeddingClient>();
}

Thresholds parse_thresholds(const std::vector<int>& v) {
  if (v.size() != 4) throw ConfigError("--thresholds needs exactly four values");
  Thresholds t{v[0], v[1], v[2], v[3]};
  complexity_level(0, t);  // validates ordering
  return t;
}

std::vector<AnnotatedModel> annotated_models(const std::vector<LoadedItem>& items, std::size_t& failures) {
  std::vector<AnnotatedModel> out;
  for (const auto& item : items) {
    if (!item.file) {
      ++failures;
      continue;
    }
    out.push_back({item.file->model, item.file->annotations});
  }
  return out;
}

void write_points(const PointCloud& cloud, const std::string& path, const std::string& format, std::ostream& out) {
  if (format == "bin") {
    static_assert(std::endian::native == std::endian::little, "binary point output assumes a little-endian host");
    std::string bytes;
    bytes.reserve(cloud.size() * 12);
    for (const auto& p : cloud) {
      for (double v : {p.x, p.y, p.z}) {
        const auto f = static_cast<float>(v);
        bytes.append(reinterpret_cast<const char*>(&f), sizeof f);
      }
    }
    emit(bytes, path, out);
    return;
  }
  std::string text;
  char buf[96];
  for (const auto& p : cloud) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", p.x, p.y, p.z);
    text += buf;
  }
  emit(text, path, out);
}

// Per-subcommand option holders.
struct ConvertOpts {
  std::string input, to = "code", mode = "tilde", output;
};
struct ValidateOpts {
  std::string dir, output;
  int resolution = kDefaultResolution;
};
struct SegmentOpts {
  std::string input, output;
  int threshold = kDefaultRepeatThreshold;
};
struct RenderOpts {
  std::string input, output;
  int highlight = 0, component = 0, sketch = 0, size = 448, resolution = kDefaultResolution;
  double transparency = kDefaultOthersTransparency;
};
struct SampleOpts {
  std::string input, output, format = "xyz";
  int n = kDefaultSampleCount, resolution = kDefaultResolution;
  std::uint64_t seed = 0;
};
struct MetricsOpts {
  std::string gen, ref, train, captions, output;
  ReportOptions report;
};
struct AnnotateOpts {
  std::string dir, output, bank, vlm = "mock";
  std::vector<int> thresholds{kDefaultThresholds.begin(), kDefaultThresholds.end()};
  int resolution = kDefaultResolution;
};
struct SynthOpts {
  std::string dir, output, judge = "heuristic", vlm = "mock";
  std::size_t quota = 0;
  std::uint64_t seed = 0;
  double ratio_lo = 0.30, ratio_hi = 0.50;
  int resolution = 32;
};
struct GroupOpts {
  std::string dir, output, embed = "mock";
  std::size_t window = kDefaultWindow, neighbors = kDefaultNeighbors;
  int resolution = kDefaultResolution;
};
struct DedupOpts {
  std::string dir, output;
};

int finish(std::size_t failures, bool strict) { return failures > 0 && strict ? kExitFailure : kExitOk; }

int cmd_convert(const ConvertOpts& o, std::ostream& out) {
  const ModelFile f = load_model_file(o.input);
  if (o.to == "json") {
    json j = model_to_json(f.model);
    if (f.annotations) j["annotations"] = annotations_to_json(*f.annotations);
    emit(dump(j), o.output, out);
  } else if (o.to == "code") {
    emit(print_code(f.model), o.output, out);
  } else {
    if (!f.annotations) throw StructuralError(o.input + " carries no annotations");
    emit(print_spcc(f.model, *f.annotations, doc_mode_from_string(o.mode)), o.output, out);
  }
  return kExitOk;
}

int cmd_validate(const ValidateOpts& o, unsigned jobs, bool strict, std::ostream& out) {
  const auto files = model_files(o.dir);
  std::vector<json> items(files.size());
  std::vector<char> ok(files.size(), 0);
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    json item = {{"file", files[i].filename().string()}};
    try {
      const ModelFile f = load_model_file(files[i].string());
      const BuildCheck check = check_buildable(f.model, o.resolution, 1);
      ok[i] = check.ok;
      item["ok"] = check.ok;
      if (!check.ok) item["reason"] = check.reason;
    } catch (const Error& e) {
      item["ok"] = false;
      item["reason"] = e.what();
    }
    items[i] = std::move(item);
  });
  const auto valid = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
  json report = {{"total", files.size()},
                 {"valid", valid},
                 {"SR", files.empty() ? json(nullptr) : json(static_cast<double>(valid) / files.size())},
                 {"items", items}};
  emit(dump(report), o.output, out);
  return finish(files.size() - valid, strict);
}

int cmd_segment(const SegmentOpts& o, std::ostream& out) {
  const ModelFile f = load_model_file(o.input);
  json comps = json::array();
  const auto components = segment(f.model, o.threshold);
  for (std::size_t c = 0; c < components.size(); ++c) {
    const auto& pair = representative(f.model, components[c]);
    const auto dir = extrusion_direction_label(pair);
    comps.push_back({{"index", c + 1},
                     {"first_pair", components[c].first + 1},
                     {"multiplicity", components[c].multiplicity},
                     {"op", to_string(pair.extrude.op)},
                     {"direction", dir ? json(to_string(*dir)) : json(nullptr)}});
  }
  emit(dump({{"id", f.model.id}, {"components", comps}}), o.output, out);
  return kExitOk;
}

int cmd_render(const RenderOpts& o, unsigned jobs) {
  const ModelFile f = load_model_file(o.input);
  RenderOptions ro{o.size, o.resolution, jobs};
  RasterImage img;
  if (o.sketch > 0) {
    if (static_cast<std::size_t>(o.sketch) > f.model.pairs.size()) throw DomainError("--sketch index out of range");
    img = render_sketch(f.model.pairs[static_cast<std::size_t>(o.sketch - 1)].sketch, o.size);
  } else if (o.component > 0) {
    img = render_component(f.model, static_cast<std::size_t>(o.component - 1), ro);
  } else if (o.highlight > 0) {
    img = render_views(f.model, static_cast<std::size_t>(o.highlight - 1), o.transparency, ro);
  } else {
    img = render_views(f.model, std::nullopt, o.transparency, ro);
  }
  write_png(img, o.output);
  return kExitOk;
}

int cmd_sample(const SampleOpts& o, unsigned jobs, std::ostream& out) {
  const ModelFile f = load_model_file(o.input);
  const VoxelSolid solid = evaluate_model(f.model, o.resolution, jobs);
  write_points(sample_surface_points(solid, o.n, o.seed), o.output, o.format, out);
  return kExitOk;
}

int cmd_metrics(MetricsOpts o, unsigned jobs, bool strict, std::ostream& out) {
  o.report.jobs = jobs;
  const auto gen = load_dir(o.gen);
  const auto ref = load_dir(o.ref);
  ReportInputs in;
  std::size_t failures = 0;
  for (const auto& item : gen) {
    if (item.file) {
      in.generated.push_back(item.file->model);
    } else {
      in.generated.push_back(std::nullopt);
      ++failures;
    }
  }
  std::map<std::string, std::size_t> ref_by_stem;
  for (const auto& item : ref) {
    if (!item.file) {
      ++failures;
      continue;
    }
    ref_by_stem[item.path.stem().string()] = in.reference.size();
    in.reference.push_back(item.file->model);
  }
  // Pair by file stem when every generated file has a namesake reference.
  bool aligned = !gen.empty() && gen.size() == in.reference.size();
  for (const auto& item : gen) aligned = aligned && ref_by_stem.count(item.path.stem().string()) > 0;
  if (aligned) {
    std::vector<CadModel> ordered;
    for (const auto& item : gen) ordered.push_back(in.reference[ref_by_stem[item.path.stem().string()]]);
    in.reference = std::move(ordered);
    in.aligned = true;
  }
  if (!o.train.empty()) {
    in.training_hashes.emplace();
    for (const auto& item : load_dir(o.train)) {
      if (item.file) in.training_hashes->insert(canonical_hash(item.file->model));
    }
  }
  if (!o.captions.empty()) {
    std::istringstream lines(read_text_file(o.captions));
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const json j = json::parse(line);
      in.captions.push_back({j.at("prediction").get<std::string>(), j.at("references").get<std::vector<std::string>>()});
    }
  }
  emit(dump(report_to_json(compute_report(in, o.report))), o.output, out);
  return finish(failures, strict);
}

int cmd_annotate(const AnnotateOpts& o, unsigned jobs, bool strict) {
  ensure_dir(o.output);
  const ExampleBank bank = o.bank.empty() ? ExampleBank::builtin() : ExampleBank::load(o.bank);
  bank.validate();
  AnnotatorOptions ao;
  ao.thresholds = parse_thresholds(o.thresholds);
  ao.max_in_flight = jobs;
  ao.render.resolution = o.resolution;
  auto client = make_vlm(o.vlm);

  std::size_t failures = 0;
  std::vector<CadModel> models;
  for (const auto& item : load_dir(o.dir)) {
    if (item.file) {
      models.push_back(item.file->model);
    } else {
      ++failures;
    }
  }
  const auto outcomes = annotate_models(models, *client, bank, ao);
  std::string quarantine, exchanges;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& oc = outcomes[i];
    for (const auto& ex : oc.exchanges) exchanges += exchange_to_json(ex).dump() + "\n";
    if (!oc.ok) {
      ++failures;
      quarantine += json{{"id", oc.model_id}, {"reason", oc.failure}}.dump() + "\n";
      spdlog::warn("{} quarantined: {}", oc.model_id, oc.failure);
      continue;
    }
    json j = model_to_json(models[i]);
    j["annotations"] = annotations_to_json(oc.annotations);
    write_text_file((fs::path(o.output) / (models[i].id + ".json")).string(), dump(j));
  }
  write_text_file((fs::path(o.output) / "quarantine.jsonl").string(), quarantine);
  write_text_file((fs::path(o.output) / "exchanges.jsonl").string(), exchanges);
  spdlog::info("annotated {} of {} models", outcomes.size() - std::count_if(outcomes.begin(), outcomes.end(),
                                                                             [](const auto& oc) { return !oc.ok; }),
               outcomes.size());
  return finish(failures, strict);
}

int cmd_synth_corpus(const SynthOpts& o, bool strict) {
  ensure_dir(o.output);
  std::size_t failures = 0;
  const auto models = annotated_models(load_dir(o.dir), failures);
  const Corpus corpus = build_spcc_corpus(models);
  json manifest = {{"documents", json::array()}, {"skipped", json::array()}};
  for (const auto& doc : corpus.docs) {
    const std::string file = doc.doc_id + ".spcc";
    write_text_file((fs::path(o.output) / file).string(), doc.text);
    manifest["documents"].push_back(
        {{"doc_id", doc.doc_id}, {"source_id", doc.source_id}, {"mode", to_string(doc.mode)}, {"file", file}});
  }
  for (const auto& s : corpus.skipped) {
    manifest["skipped"].push_back({{"id", s.id}, {"reason", s.reason}});
    ++failures;
  }
  write_text_file((fs::path(o.output) / "manifest.json").string(), dump(manifest));
  return finish(failures, strict);
}

int cmd_synth_instructions(const SynthOpts& o, bool strict, std::ostream& out) {
  std::size_t failures = 0;
  const auto models = annotated_models(load_dir(o.dir), failures);
  InstructionOptions io;
  io.quota = o.quota;
  io.seed = o.seed;
  io.completion_range = {o.ratio_lo, o.ratio_hi};
  io.resolution = o.resolution;
  std::shared_ptr<VlmClient> client;
  if (o.judge == "vlm") {
    client = make_vlm(o.vlm);
    io.judge = JudgeMode::Vlm;
    io.judge_client = client.get();
  }
  const InstructionDataset ds = build_instruction_dataset(models, io);
  std::string text;
  for (const auto& r : ds.records) text += record_to_json(r).dump() + "\n";
  emit(text, o.output, out);
  for (Task t : kAllTasks) spdlog::info("{}: {} records", to_string(t), ds.counts.count(t) ? ds.counts.at(t) : 0);
  return finish(failures, strict);
}

int cmd_group(const GroupOpts& o, unsigned jobs, bool strict) {
  ensure_dir(o.output);
  std::size_t failures = 0;
  const auto models = annotated_models(load_dir(o.dir), failures);
  const Corpus corpus = build_spcc_corpus(models);
  failures += corpus.skipped.size();

  std::map<std::string, const CadModel*> by_id;
  for (const auto& m : models) by_id[m.model.id] = &m.model;
  std::vector<std::string> sources;
  for (const auto& doc : corpus.docs) {
    if (sources.empty() || sources.back() != doc.source_id) sources.push_back(doc.source_id);
  }
  auto embedder = make_embedder(o.embed);
  std::vector<std::vector<double>> vectors(sources.size());
  std::mutex embed_mutex;
  RenderOptions ro;
  ro.resolution = o.resolution;
  ro.jobs = 1;
  parallel_for(sources.size(), jobs, [&](std::size_t i) {
    const RasterImage img = render_views(*by_id.at(sources[i]), std::nullopt, kDefaultOthersTransparency, ro);
    std::lock_guard lock(embed_mutex);
    vectors[i] = embedder->embed(img);
  });
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < sources.size(); ++i) slot[sources[i]] = i;

  std::vector<EmbeddedDoc> docs;
  for (const auto& doc : corpus.docs) {
    docs.push_back({doc.doc_id, vectors[slot[doc.source_id]], estimate_tokens(doc.text)});
  }
  const Grouping g = group_contexts(docs, o.window, o.neighbors);
  json manifest = {{"window", o.window}, {"contexts", json::array()}, {"warnings", g.warnings}};
  for (std::size_t c = 0; c < g.contexts.size(); ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "context_%05zu.txt", c);
    std::string text;
    json ids = json::array();
    for (std::size_t idx : g.contexts[c].members) {
      text += corpus.docs[idx].text;
      ids.push_back(corpus.docs[idx].doc_id);
    }
    write_text_file((fs::path(o.output) / name).string(), text);
    manifest["contexts"].push_back({{"file", name}, {"tokens", g.contexts[c].tokens}, {"documents", ids}});
  }
  for (const auto& w : g.warnings) spdlog::warn("{}", w);
  write_text_file((fs::path(o.output) / "manifest.json").string(), dump(manifest));
  return finish(failures, strict);
}

int cmd_dedup(const DedupOpts& o, bool strict, std::ostream& out) {
  const auto items = load_dir(o.dir);
  std::size_t failures = 0;
  std::vector<CadModel> models;
  std::vector<const LoadedItem*> sources;
  for (const auto& item : items) {
    if (!item.file) {
      ++failures;
      continue;
    }
    models.push_back(item.file->model);
    sources.push_back(&item);
  }
  const DedupResult r = dedup_corpus(models);
  json kept = json::array(), removed = json::array();
  if (!o.output.empty()) ensure_dir(o.output);
  for (std::size_t idx : r.kept) {
    kept.push_back(sources[idx]->path.filename().string());
    if (!o.output.empty()) {
      fs::copy_file(sources[idx]->path, fs::path(o.output) / sources[idx]->path.filename(),
                    fs::copy_options::overwrite_existing);
    }
  }
  for (const auto& s : r.removed) removed.push_back({{"id", s.id}, {"reason", s.reason}});
  out << dump({{"kept", kept}, {"removed", removed}});
  return finish(failures, strict);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(std::make_shared<spdlog::logger>("spcc", sink));
  spdlog::set_pattern("[%l] %v");
  struct Restore {
    std::shared_ptr<spdlog::logger> logger;
    ~Restore() { spdlog::set_default_logger(logger); }
  } restore{previous};

  CLI::App app{"Sketch-extrude CAD code toolkit"};
  app.require_subcommand(1);
  unsigned jobs = default_jobs();
  bool strict = false;
  auto* o_jobs = app.add_option("--jobs,-j", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--strict", strict, "exit 1 when any item fails");
  const std::vector<std::string> vlm_kinds{"mock", "remote"};

  ConvertOpts convert;
  auto* c_convert = app.add_subcommand("convert", "convert between JSON, code and SPCC text");
  c_convert->add_option("input", convert.input)->required()->check(CLI::ExistingFile);
  c_convert->add_option("--to", convert.to)->check(CLI::IsMember({"json", "code", "spcc"}));
  c_convert->add_option("--mode", convert.mode)->check(CLI::IsMember({"tilde", "dot", "code"}));
  c_convert->add_option("-o,--output", convert.output);

  ValidateOpts validate;
  auto* c_validate = app.add_subcommand("validate", "report the buildable fraction of a directory");
  c_validate->add_option("dir", validate.dir)->required()->check(CLI::ExistingDirectory);
  c_validate->add_option("--resolution", validate.resolution)->check(CLI::Range(4, 512));
  c_validate->add_option("-o,--output", validate.output);

  SegmentOpts seg;
  auto* c_segment = app.add_subcommand("segment", "list the components of a model");
  c_segment->add_option("input", seg.input)->required()->check(CLI::ExistingFile);
  c_segment->add_option("--threshold", seg.threshold)->check(CLI::NonNegativeNumber);
  c_segment->add_option("-o,--output", seg.output);

  RenderOpts rnd;
  auto* c_render = app.add_subcommand("render", "render a model, a highlighted component or a sketch to PNG");
  c_render->add_option("input", rnd.input)->required()->check(CLI::ExistingFile);
  c_render->add_option("-o,--output", rnd.output)->required();
  auto* o_highlight = c_render->add_option("--highlight", rnd.highlight, "1-based component")->check(CLI::PositiveNumber);
  auto* o_component = c_render->add_option("--component", rnd.component, "1-based component")->check(CLI::PositiveNumber);
  auto* o_sketch = c_render->add_option("--sketch", rnd.sketch, "1-based pair")->check(CLI::PositiveNumber);
  o_highlight->excludes(o_component)->excludes(o_sketch);
  o_component->excludes(o_sketch);
  c_render->add_option("--size", rnd.size)->check(CLI::Range(16, 4096));
  c_render->add_option("--resolution", rnd.resolution)->check(CLI::Range(4, 512));
  c_render->add_option("--transparency", rnd.transparency)->check(CLI::Range(0.0, 1.0));

  SampleOpts smp;
  auto* c_sample = app.add_subcommand("sample", "sample surface points");
  c_sample->add_option("input", smp.input)->required()->check(CLI::ExistingFile);
  c_sample->add_option("-o,--output", smp.output);
  c_sample->add_option("--n", smp.n)->check(CLI::PositiveNumber);
  c_sample->add_option("--seed", smp.seed);
  c_sample->add_option("--format", smp.format)->check(CLI::IsMember({"xyz", "bin"}));
  c_sample->add_option("--resolution", smp.resolution)->check(CLI::Range(4, 512));

  MetricsOpts met;
  auto* c_metrics = app.add_subcommand("metrics", "full metric report");
  c_metrics->add_option("--gen", met.gen)->required()->check(CLI::ExistingDirectory);
  c_metrics->add_option("--ref", met.ref)->required()->check(CLI::ExistingDirectory);
  c_metrics->add_option("--train", met.train)->check(CLI::ExistingDirectory);
  c_metrics->add_option("--captions", met.captions)->check(CLI::ExistingFile);
  c_metrics->add_option("--resolution", met.report.resolution)->check(CLI::Range(4, 512));
  c_metrics->add_option("--samples", met.report.samples)->check(CLI::PositiveNumber);
  c_metrics->add_option("--seed", met.report.seed);
  c_metrics->add_option("--tol", met.report.tol)->check(CLI::NonNegativeNumber);
  c_metrics->add_option("--jsd-grid", met.report.jsd_grid)->check(CLI::PositiveNumber);
  c_metrics->add_option("-o,--output", met.output);

  AnnotateOpts ann;
  auto* c_annotate = app.add_subcommand("annotate", "two-stage annotation of a model directory");
  c_annotate->add_option("dir", ann.dir)->required()->check(CLI::ExistingDirectory);
  c_annotate->add_option("-o,--output", ann.output)->required();
  c_annotate->add_option("--bank", ann.bank)->check(CLI::ExistingFile);
  c_annotate->add_option("--vlm", ann.vlm)->check(CLI::IsMember(vlm_kinds));
  c_annotate->add_option("--thresholds", ann.thresholds)->expected(4)->delimiter(',');
  c_annotate->add_option("--resolution", ann.resolution)->check(CLI::Range(4, 512));

  SynthOpts syn;
  auto* c_synth = app.add_subcommand("synth", "build corpora and instruction datasets");
  c_synth->require_subcommand(1);
  auto* c_corpus = c_synth->add_subcommand("corpus", "SPCC documents from annotated models");
  c_corpus->add_option("dir", syn.dir)->required()->check(CLI::ExistingDirectory);
  c_corpus->add_option("-o,--output", syn.output)->required();
  auto* c_instr = c_synth->add_subcommand("instructions", "multitask instruction records as JSONL");
  c_instr->add_option("dir", syn.dir)->required()->check(CLI::ExistingDirectory);
  c_instr->add_option("-o,--output", syn.output);
  c_instr->add_option("--quota", syn.quota, "records per task, 0 for all");
  c_instr->add_option("--seed", syn.seed);
  c_instr->add_option("--ratio-lo", syn.ratio_lo)->check(CLI::Range(0.0, 1.0));
  c_instr->add_option("--ratio-hi", syn.ratio_hi)->check(CLI::Range(0.0, 1.0));
  c_instr->add_option("--judge", syn.judge)->check(CLI::IsMember({"heuristic", "vlm"}));
  c_instr->add_option("--vlm", syn.vlm)->check(CLI::IsMember(vlm_kinds));
  c_instr->add_option("--resolution", syn.resolution)->check(CLI::Range(4, 512));

  GroupOpts grp;
  auto* c_group = app.add_subcommand("group", "pack similar documents into contexts");
  c_group->add_option("dir", grp.dir)->required()->check(CLI::ExistingDirectory);
  c_group->add_option("-o,--output", grp.output)->required();
  c_group->add_option("--window", grp.window)->check(CLI::PositiveNumber);
  c_group->add_option("--neighbors", grp.neighbors)->check(CLI::PositiveNumber);
  c_group->add_option("--embed", grp.embed)->check(CLI::IsMember(vlm_kinds));
  c_group->add_option("--resolution", grp.resolution)->check(CLI::Range(4, 512));

  DedupOpts ddp;
  auto* c_dedup = app.add_subcommand("dedup", "drop duplicate and trivial models");
  c_dedup->add_option("dir", ddp.dir)->required()->check(CLI::ExistingDirectory);
  c_dedup->add_option("-o,--output", ddp.output, "copy kept files here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_convert->parsed()) return cmd_convert(convert, out);
    if (c_validate->parsed()) return cmd_validate(validate, jobs, strict, out);
    if (c_segment->parsed()) return cmd_segment(seg, out);
    if (c_render->parsed()) return cmd_render(rnd, jobs);
    if (c_sample->parsed()) return cmd_sample(smp, jobs, out);
    if (c_metrics->parsed()) return cmd_metrics(met, jobs, strict, out);
    if (c_annotate->parsed()) return cmd_annotate(ann, o_jobs->count() > 0 ? jobs : 8u, strict);
    if (c_corpus->parsed()) return cmd_synth_corpus(syn, strict);
    if (c_instr->parsed()) return cmd_synth_instructions(syn, strict, out);
    if (c_group->parsed()) return cmd_group(grp, jobs, strict);
    if (c_dedup->parsed()) return cmd_dedup(ddp, strict, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace spcc
