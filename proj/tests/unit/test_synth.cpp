#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "spcc/error.hpp"
#include "spcc/synth.hpp"
#include "support/model_gen.hpp"

using namespace spcc;
using namespace spcc::testing;

namespace {

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

std::size_t headers(const std::string& s) {
  std::size_t n = 0;
  for (std::size_t pos = s.find(kComponentPrefix); pos != std::string::npos; pos = s.find(kComponentPrefix, pos + 1)) {
    if (pos == 0 || s[pos - 1] == '\n') ++n;
  }
  return n;
}

Annotations notes_for(const CadModel& m) {
  std::mt19937_64 rng(std::hash<std::string>{}(m.id));
  return random_annotations(rng, m);
}

AnnotatedModel annotated(CadModel m) {
  Annotations a = notes_for(m);
  return {std::move(m), std::move(a)};
}

CadModel single_block(std::string id) {
  CadModel m;
  m.id = std::move(id);
  m.pairs.push_back({Sketch{{rect_loop(40, 30), circle_loop(20, 15, 5)}}, extrude({-20, -15, 0}, 12)});
  return m;
}

}  // namespace

TEST_CASE("corpus has two documents per multi-component model and one otherwise") {
  const std::vector<AnnotatedModel> models = {annotated(plate_with_hole("b")), annotated(single_block("a")),
                                              {block_with_pegs(4, "c"), std::nullopt}};
  const Corpus c = build_spcc_corpus(models);
  REQUIRE(c.docs.size() == 3);
  CHECK(c.docs[0].doc_id == "a_tilde");
  CHECK(c.docs[1].doc_id == "b_tilde");
  CHECK(c.docs[2].doc_id == "b_dot");
  CHECK(c.docs[2].mode == DocMode::Dot);
  REQUIRE(c.skipped.size() == 1);
  CHECK(c.skipped[0].id == "c");
  for (const auto& d : c.docs) CHECK(parse(d.text).mode == d.mode);
}

TEST_CASE("completion records are strict line prefixes within the ratio range") {
  std::vector<AnnotatedModel> models;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) models.push_back(annotated(random_model(rng, {}, "m" + std::to_string(i))));
  const Corpus c = build_spcc_corpus(models);
  const auto recs = build_completion_records(c.docs, {}, 9);
  CHECK(recs.size() == c.docs.size());
  for (const auto& r : recs) {
    CHECK(r.output.compare(0, r.input.size(), r.input) == 0);
    CHECK(r.input.size() < r.output.size());
    CHECK(r.input.back() == '\n');
    const double ratio = static_cast<double>(line_count(r.input)) / static_cast<double>(line_count(r.output));
    CHECK(ratio >= 0.30);
    CHECK(ratio <= 0.50);
    CHECK(std::to_string(line_count(r.input)) == r.meta.at("prefix_lines"));
  }
  CHECK(build_completion_records(c.docs, {}, 9).front().input == recs.front().input);
  CHECK_THROWS_AS(build_completion_records(c.docs, {0.6, 0.5}, 0), DomainError);
}

TEST_CASE("heuristic picks the last removable component") {
  auto choice = select_removable_heuristic(plate_with_hole(), std::nullopt);
  REQUIRE(choice);
  CHECK(choice->component == 1);
  CHECK(choice->deletion_instruction == "Delete component 2 from the CAD model.");

  CHECK(removal_problem(plate_with_hole(), 0) == "remainder does not start with NewBody");
  CHECK(removal_problem(single_block("x"), 0) == "model has a single component");
}

TEST_CASE("removal that regroups components is refused") {
  // pegs A A X A A: dropping X merges a run of four.
  CadModel m = block_with_pegs(5);
  m.pairs[3].sketch.loops[0] = circle_loop(0, 0, 5);
  CHECK(segment(m).size() == 6);
  CHECK(removal_problem(m, 3) == "remainder regroups into different components");
}

TEST_CASE("edit records invert each other") {
  const AnnotatedModel am = annotated(plate_with_hole());
  const auto choice = select_removable_heuristic(am.model, am.annotations);
  REQUIRE(choice);
  const auto recs = build_edit_records(am, *choice);
  REQUIRE(recs.size() == 4);
  CHECK(recs[0].task == Task::Deletion);
  CHECK(recs[1].task == Task::Addition);
  CHECK(recs[0].output == recs[1].input);
  CHECK(recs[1].output == recs[0].input);
  CHECK(recs[2].output == recs[3].input);
  CHECK(recs[3].output == recs[2].input);
  CHECK(headers(recs[2].input) == headers(recs[2].output) + 1);
  CHECK(recs[1].instruction == "Add a new component to the CAD model: " + am.annotations->components[1].description);
  CHECK(recs[0].instruction == "Delete component 2 (" + am.annotations->components[1].name + ") from the CAD model.");
}

TEST_CASE("judge replies") {
  const EditChoice c = parse_judge_reply("Index: 2\nReason: later feature\nDelete: remove the hole\nAdd: drill a hole", 2);
  CHECK(c.component == 1);
  CHECK(c.deletion_instruction == "remove the hole");
  CHECK_THROWS_AS(parse_judge_reply("Index: 3\nReason: r\nDelete: d\nAdd: a", 2), ResponseParseError);
  CHECK_THROWS_AS(parse_judge_reply("Index: two\nReason: r\nDelete: d\nAdd: a", 2), ResponseParseError);
  CHECK_THROWS_AS(parse_judge_reply("Index: 1", 2), ResponseParseError);

  RenderOptions r;
  r.size = 64;
  r.resolution = 16;
  MockVlmClient mock(offline_vlm_reply);
  const auto picked = select_removable_judge(plate_with_hole(), mock, r);
  REQUIRE(picked);
  CHECK(picked->component == 1);
  CHECK(request_image_count(mock.requests().front()) == 3);
  MockVlmClient wrong([](const std::vector<ChatMessage>&) {
    return std::string("Index: 1\nReason: r\nDelete: d\nAdd: a");
  });
  CHECK_FALSE(select_removable_judge(plate_with_hole(), wrong, r).has_value());
}

TEST_CASE("instruction dataset covers every task with the expected counts") {
  std::vector<AnnotatedModel> models = {annotated(plate_with_hole("p")), annotated(single_block("s")),
                                        annotated(block_with_pegs(4, "q"))};
  const InstructionDataset ds = build_instruction_dataset(models);
  CHECK(ds.counts.at(Task::Text2CAD) == 3);
  CHECK(ds.counts.at(Task::Caption) == 3);
  CHECK(ds.counts.at(Task::Completion) == 5);
  CHECK(ds.counts.at(Task::Deletion) == 2);
  CHECK(ds.counts.at(Task::AdditionStar) == 2);
  for (const auto& r : ds.records) {
    const auto back = record_from_json(record_to_json(r));
    CHECK(back.task == r.task);
    CHECK(back.input == r.input);
    CHECK(back.meta == r.meta);
  }
  for (const auto& r : ds.records) {
    if (r.task == Task::Text2CAD && r.source_id == "p") {
      const auto& a = *models[0].annotations;
      CHECK(r.input == a.global->abstract_text + " " + a.global->detailed);
    }
    if (r.task == Task::Caption && r.source_id == "s") CHECK(r.output == models[1].annotations->components[0].description);
  }

  InstructionOptions o;
  o.quota = 1;
  const InstructionDataset q = build_instruction_dataset(models, o);
  for (Task t : kAllTasks) CHECK(q.counts.at(t) == 1);
  CHECK(q.records.size() == 7);
}

TEST_CASE("grouping walks nearest neighbours and packs windows") {
  // A and C are similar, B is far from both.
  std::vector<EmbeddedDoc> docs = {{"A", {1, 0, 0}, 100}, {"B", {0, 0, 1}, 100}, {"C", {0.9, 0.1, 0}, 100}};
  const Grouping g = group_contexts(docs, 250, 1);
  CHECK(g.order == std::vector<std::size_t>{0, 2, 1});
  REQUIRE(g.contexts.size() == 2);
  CHECK(g.contexts[0].members == std::vector<std::size_t>{0, 2});
  CHECK(g.contexts[0].tokens == 200);
  CHECK(g.contexts[1].members == std::vector<std::size_t>{1});

  docs.push_back({"D", {0, 1, 0}, 300});
  const Grouping w = group_contexts(docs, 250, 2);
  CHECK(w.warnings.size() == 1);
  std::set<std::size_t> seen;
  for (const auto& c : w.contexts) {
    for (auto i : c.members) CHECK(seen.insert(i).second);
  }
  CHECK(seen.size() == 4);
  CHECK(estimate_tokens("abcde") == 2);
  CHECK(estimate_tokens("") == 0);
  CHECK(cosine_similarity({1, 0}, {0, 0}) == 0);
}

TEST_CASE("grouping hand trace with three docs in one window") {
  // sim(A,B) = 0.8 > sim(A,C) = 0.6 > sim(B,C) = 0.
  const std::vector<EmbeddedDoc> docs = {{"A", {1, 0, 0}, 10}, {"B", {0.8, 0.6, 0}, 10}, {"C", {0.6, -0.8, 0}, 10}};
  const Grouping g = group_contexts(docs, 2048, 7);
  CHECK(g.order == std::vector<std::size_t>{0, 1, 2});
  REQUIRE(g.contexts.size() == 1);
  CHECK(g.contexts[0].members == std::vector<std::size_t>{0, 1, 2});
  const Grouping again = group_contexts(docs, 2048, 7);
  CHECK(again.order == g.order);
}

TEST_CASE("dedup drops trivial and repeated models") {
  CadModel box;
  box.id = "box";
  box.pairs.push_back(box_pair({0, 0, 0}, 10, 10, 10));
  CadModel copy = plate_with_hole("copy");
  const DedupResult r = dedup_corpus({box, plate_with_hole("orig"), copy, single_block("blk")});
  CHECK(r.kept == std::vector<std::size_t>{1, 3});
  REQUIRE(r.removed.size() == 2);
  CHECK(r.removed[0].reason == "trivial model");
  CHECK(r.removed[1].reason == "duplicate");
  CHECK(is_trivial(box));
  CHECK_FALSE(is_trivial(single_block("x")));
}
