#include <doctest.h>

#include <atomic>
#include <chrono>
#include <memory>
#include <thread>

#include "spcc/annotator.hpp"
#include "spcc/error.hpp"
#include "support/model_gen.hpp"

using namespace spcc;
using namespace spcc::testing;

namespace {

AnnotatorOptions fast() {
  AnnotatorOptions o;
  o.render.size = 64;
  o.render.resolution = 16;
  o.render.jobs = 1;
  return o;
}

// Three components: base, hole, boss.
CadModel three_parts() {
  CadModel m = plate_with_hole("three");
  m.pairs.push_back(cylinder_pair({-25, -15, 15}, 6, 10, BooleanOp::Join));
  return m;
}

// Four components, the last a collapsed run of four pegs.
CadModel four_parts() {
  CadModel m = three_parts();
  m.id = "four";
  for (int i = 0; i < 4; ++i) m.pairs.push_back(cylinder_pair({-30 + 15 * i, 20, 15}, 4, 8, BooleanOp::Join));
  return m;
}

bool is_stage2(const std::vector<ChatMessage>& req) {
  return request_text(req).find("You need to output three lines") != std::string::npos;
}

}  // namespace

TEST_CASE("complexity levels use inclusive upper bounds") {
  CHECK(complexity_level(std::size_t{0}) == 1);
  CHECK(complexity_level(std::size_t{10}) == 1);
  CHECK(complexity_level(std::size_t{11}) == 2);
  CHECK(complexity_level(std::size_t{20}) == 2);
  CHECK(complexity_level(std::size_t{35}) == 3);
  CHECK(complexity_level(std::size_t{60}) == 4);
  CHECK(complexity_level(std::size_t{61}) == 5);
  CHECK(complexity_level(std::size_t{5}, Thresholds{1, 2, 3, 4}) == 5);
  CHECK_THROWS_AS(complexity_level(std::size_t{5}, Thresholds{1, 3, 3, 4}), ConfigError);
}

TEST_CASE("example bank parsing and picking") {
  const ExampleBank bank = ExampleBank::builtin();
  CHECK_NOTHROW(bank.validate());
  for (std::uint64_t key = 0; key < 50; ++key) {
    const auto pick = bank.pick(3, 1, key);
    CHECK(pick[0].output != pick[1].output);
    CHECK(pick[0].level == 3);
    CHECK(pick[1].stage == 1);
  }
  CHECK_THROWS_AS(ExampleBank::parse_jsonl("{\"level\": 1, \"prompt_stage\": 1, \"exemplar_input\": \"a\", "
                                           "\"exemplar_output\": \"b\"}\n"),
                  ConfigError);
  CHECK_THROWS_AS(ExampleBank::parse_jsonl("not json\n"), ConfigError);
  std::string jsonl;
  for (int level = 1; level <= 5; ++level) {
    for (int stage = 1; stage <= 2; ++stage) {
      for (int k = 0; k < 2; ++k) {
        jsonl += "{\"level\": " + std::to_string(level) + ", \"prompt_stage\": " + std::to_string(stage) +
                 ", \"exemplar_input\": \"in\", \"exemplar_output\": \"out " + std::to_string(k) + "\"}\n";
      }
    }
  }
  CHECK(ExampleBank::parse_jsonl(jsonl).exemplars().size() == 20);
}

TEST_CASE("additional information sentence") {
  Stage1Extras x;
  x.direction = Direction::Up;
  x.length = 12;
  CHECK(additional_information(x) == "The sketch is extruded upwards with an extrusion length of 12 units.");
  x.multiplicity = 4;
  x.direction.reset();
  CHECK(additional_information(x) ==
        "The sketch is extruded with an extrusion length of 12 units. The component consists of 4 identical "
        "sketch-extrude pairs.");
  CadModel m = plate_with_hole();
  m.pairs[1].extrude.extent = ExtentType::TwoSided;
  m.pairs[1].extrude.dist2 = 7;
  CHECK(stage1_extras(m, segment(m)[1]).length == 37);
}

TEST_CASE("stage requests carry the filled template first, then images") {
  const auto ex = ExampleBank::builtin().pick(1, 1, 0);
  const std::vector<std::uint8_t> a{1}, b{2};
  Stage1Extras x;
  x.direction = Direction::Down;
  x.length = 5;
  const auto r1 = build_stage1_request(x, a, b, ex);
  REQUIRE(r1.size() == 1);
  REQUIRE(r1[0].content.size() == 3);
  CHECK(r1[0].content[0].kind == ContentPart::Kind::Text);
  CHECK(r1[0].content[1].png == a);
  CHECK(r1[0].content[2].png == b);
  const std::string t1 = r1[0].content[0].text;
  CHECK(t1.find("{") == std::string::npos);
  CHECK(t1.find("extruded downwards with an extrusion length of 5 units") != std::string::npos);
  CHECK(t1.find(ex[0].output) != std::string::npos);
  CHECK(t1.find(ex[1].output) != std::string::npos);

  const auto ex2 = ExampleBank::builtin().pick(1, 2, 0);
  const auto r2 = build_stage2_request(2, {"d1", "d2"}, a, {b, b}, ex2);
  CHECK(request_image_count(r2) == 3);
  const std::string t2 = r2[0].content[0].text;
  CHECK(t2.find("consisting of 2 modules") != std::string::npos);
  CHECK(t2.find("input 3 pictures") != std::string::npos);
  CHECK(t2.find("Module 2: d2") != std::string::npos);
  CHECK(t2.find("{") == std::string::npos);
  CHECK_THROWS_AS(build_stage2_request(3, {"d1", "d2"}, a, {b, b}, ex2), StructuralError);
}

TEST_CASE("stage two reply parsing") {
  const auto r = parse_stage2_response("Line 1: A plate.\n\nLine 2: A plate with a hole.\nLine 3: plate; hole (round)\n", 2);
  CHECK(r.abstract_text == "A plate.");
  CHECK(r.detailed == "A plate with a hole.");
  CHECK(r.names == std::vector<std::string>{"plate", "hole round"});
  CHECK_THROWS_AS(parse_stage2_response("only one line", 2), ResponseParseError);
  CHECK_THROWS_AS(parse_stage2_response("a\nb\nx; y; z", 2), ResponseParseError);
  CHECK_THROWS_AS(parse_stage1_response("  \n "), ResponseParseError);
  CHECK(parse_stage1_response(" A\nplate ") == "A plate");
}

TEST_CASE("one stage-one call per component plus one stage-two call") {
  MockVlmClient mock(offline_annotation_reply);
  const AnnotationOutcome out = annotate_model(four_parts(), mock, ExampleBank::builtin(), fast());
  REQUIRE(out.ok);
  CHECK(mock.call_count() == 5);
  const auto reqs = mock.requests();
  std::size_t stage2 = 0;
  for (const auto& req : reqs) {
    REQUIRE(req.size() == 1);
    CHECK(req[0].content[0].kind == ContentPart::Kind::Text);
    const std::string text = request_text(req);
    CHECK(text.find("Example 1:") != std::string::npos);
    CHECK(text.find("Example 2:") != std::string::npos);
    CHECK(text.find("Example 3:") == std::string::npos);
    if (is_stage2(req)) {
      ++stage2;
      CHECK(request_image_count(req) == 5);
    } else {
      CHECK(request_image_count(req) == 2);
    }
  }
  CHECK(stage2 == 1);
  CHECK(is_stage2(reqs.back()));
  CHECK(request_text(reqs[3]).find("consists of 4 identical sketch-extrude pairs") != std::string::npos);
  REQUIRE(out.annotations.global.has_value());
  CHECK(out.annotations.components.size() == 4);
  CHECK(out.annotations.components[3].name == "part 4");
  CHECK_NOTHROW(print_spcc(four_parts(), out.annotations, DocMode::Tilde));
  CHECK(out.exchanges.size() == 5);
  CHECK(out.exchanges[0].image_sha256.size() == 2);
  CHECK(out.exchanges[0].image_sha256[0].size() == 64);
}

TEST_CASE("single-component models skip stage two") {
  CadModel m;
  m.id = "one";
  m.pairs.push_back(box_pair({0, 0, 0}, 30, 30, 10));
  MockVlmClient mock(offline_annotation_reply);
  const auto out = annotate_model(m, mock, ExampleBank::builtin(), fast());
  REQUIRE(out.ok);
  CHECK(mock.call_count() == 1);
  CHECK_FALSE(out.annotations.global.has_value());
  CHECK(out.annotations.components.at(0).name.empty());
}

TEST_CASE("a reply malformed twice quarantines the model") {
  MockVlmClient mock([](const std::vector<ChatMessage>& req) {
    return is_stage2(req) ? std::string("just one line") : offline_annotation_reply(req);
  });
  const auto out = annotate_model(three_parts(), mock, ExampleBank::builtin(), fast());
  CHECK_FALSE(out.ok);
  CHECK(out.failure.find("expected 3 lines, got 1") != std::string::npos);
  CHECK(mock.call_count() == 3 + 2);
  CHECK(out.exchanges.back().attempt == 2);
  CHECK(out.annotations.components.empty());
}

TEST_CASE("a reply malformed once is re-asked and recovers") {
  std::atomic<int> stage2_calls{0};
  MockVlmClient mock([&](const std::vector<ChatMessage>& req) {
    if (is_stage2(req) && stage2_calls++ == 0) return std::string("bad");
    return offline_annotation_reply(req);
  });
  const auto out = annotate_model(three_parts(), mock, ExampleBank::builtin(), fast());
  CHECK(out.ok);
  CHECK(mock.call_count() == 5);
}

TEST_CASE("service errors retry with doubling backoff, then quarantine") {
  std::vector<std::chrono::milliseconds> sleeps;
  auto failing = std::make_shared<MockVlmClient>([](const std::vector<ChatMessage>&) -> std::string {
    throw ServiceError("connection refused");
  });
  RetryPolicy policy;
  policy.max_attempts = 3;
  policy.initial_backoff = std::chrono::milliseconds(100);
  policy.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
  RetryingVlmClient client(failing, policy);
  const auto out = annotate_model(three_parts(), client, ExampleBank::builtin(), fast());
  CHECK_FALSE(out.ok);
  CHECK(failing->call_count() == 3);
  REQUIRE(sleeps.size() == 2);
  CHECK(sleeps[0].count() == 100);
  CHECK(sleeps[1].count() == 200);
  CHECK(out.failure.find("connection refused") != std::string::npos);
}

TEST_CASE("batch annotation bounds requests in flight and keeps order") {
  std::atomic<int> in_flight{0}, peak{0};
  MockVlmClient mock([&](const std::vector<ChatMessage>& req) {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    --in_flight;
    return offline_annotation_reply(req);
  });
  std::vector<CadModel> models;
  for (int i = 0; i < 12; ++i) {
    CadModel m = i % 2 ? three_parts() : plate_with_hole();
    m.id = "m" + std::to_string(i);
    models.push_back(m);
  }
  AnnotatorOptions o = fast();
  o.max_in_flight = 3;
  const auto outs = annotate_models(models, mock, ExampleBank::builtin(), o);
  REQUIRE(outs.size() == 12);
  for (int i = 0; i < 12; ++i) {
    CHECK(outs[i].model_id == "m" + std::to_string(i));
    CHECK(outs[i].ok);
  }
  CHECK(peak.load() <= 3);
}

TEST_CASE("exchange records serialize without image bytes") {
  ExchangeRecord r;
  r.model_id = "x";
  r.image_sha256 = {"ab"};
  const auto j = exchange_to_json(r);
  CHECK(j["model_id"] == "x");
  CHECK(j["image_sha256"][0] == "ab");
  CHECK_FALSE(j.contains("images"));
}
