#include <doctest.h>

#include <random>

#include "spcc/error.hpp"
#include "spcc/metrics.hpp"
#include "support/metric_oracles.hpp"
#include "support/model_gen.hpp"

using namespace spcc;
using namespace spcc::testing;

namespace {

PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double spread = 1.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  PointCloud c(n);
  for (auto& p : c) p = {u(rng), u(rng), u(rng)};
  return c;
}

}  // namespace

TEST_CASE("chamfer of two single points") {
  CHECK(chamfer({{0, 0, 0}}, {{1, 0, 0}}) == 2.0);
  CHECK(chamfer({{0, 0, 0}, {1, 0, 0}}, {{0, 0, 0}}) == doctest::Approx(0.5 + 0.0));
  CHECK_THROWS_AS(chamfer({}, {{0, 0, 0}}), EmptinessError);
}

TEST_CASE("chamfer is symmetric and zero on identical clouds") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_cloud(rng, 20), b = random_cloud(rng, 30);
    CHECK(chamfer(a, b) == chamfer(b, a));
    CHECK(chamfer(a, a) == 0.0);
  }
}

TEST_CASE("indexed chamfer equals brute force above the threshold") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 4; ++t) {
    const auto a = random_cloud(rng, 1500 + 300 * t, 0.5);
    auto b = random_cloud(rng, 1200, 0.5);
    if (t == 3) {
      for (auto& p : b) p.z *= 1e-3;  // flat cloud
    }
    CHECK(chamfer(a, b) == chamfer_brute_force(a, b));
  }
  // Clustered clouds with far outliers stress the ring search.
  PointCloud c = random_cloud(rng, 2000, 0.01);
  c.push_back({5, 5, 5});
  const PointCloud d = random_cloud(rng, 1100, 3);
  CHECK(chamfer(c, d) == chamfer_brute_force(c, d));
}

TEST_CASE("coverage counts matched references") {
  // Both generated clouds sit next to reference 0.
  const std::vector<PointCloud> ref = {{{0, 0, 0}}, {{10, 0, 0}}};
  const std::vector<PointCloud> gen = {{{0.1, 0, 0}}, {{-0.1, 0, 0}}};
  const MmdCov m = mmd_cov(gen, ref);
  CHECK(m.cov == 0.5);
  CHECK(m.mmd == doctest::Approx(0.5 * (2 * 0.01 + 2 * 9.9 * 9.9)));
}

TEST_CASE("distribution metrics match the oracles on random batches") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 60; ++t) {
    std::vector<PointCloud> gen(uniform(rng, 1, 8)), ref(uniform(rng, 1, 8));
    for (auto& c : gen) c = random_cloud(rng, uniform(rng, 1, 16));
    for (auto& c : ref) c = random_cloud(rng, uniform(rng, 1, 16));
    const MmdCov m = mmd_cov(gen, ref, 2);
    const OracleMmdCov o = oracle_mmd_cov(gen, ref);
    CHECK(m.mmd == o.mmd);
    CHECK(m.cov == o.cov);
    CHECK(jsd(gen, ref) == oracle_jsd(gen, ref, 28));
    CHECK(jsd(gen, ref, 5) == oracle_jsd(gen, ref, 5));
  }
}

TEST_CASE("jsd bounds") {
  const std::vector<PointCloud> a = {{{0, 0, 0}, {0.1, 0, 0}}};
  const std::vector<PointCloud> b = {{{1, 1, 1}, {0.9, 1, 1}}};
  CHECK(jsd(a, b) == doctest::Approx(1.0));
  CHECK(jsd(a, a) == 0.0);
}

TEST_CASE("acc_T combines accuracies") {
  CHECK(acc_T(0.8041, 0.5909, 0.9930) == doctest::Approx(0.84525).epsilon(1e-12));
  CHECK(acc_T(80.41, 59.09, 99.30, Scale::Percent) == doctest::Approx(84.525).epsilon(1e-12));
  CHECK_THROWS_AS(acc_T(80.41, 0.59, 0.99), DomainError);
}

TEST_CASE("command flattening and accuracies") {
  const CadModel gt = plate_with_hole();
  const auto flat = flatten_commands(gt);
  // SOL, 4 lines, extrude, SOL, circle, extrude
  REQUIRE(flat.size() == 9);
  CHECK(flat[0].type == CommandType::Sol);
  CHECK(flat[5].type == CommandType::Extrude);
  CHECK(flat[5].params.size() == 11);
  CHECK(flat[5].params[6] == 128);  // scale 1.0 on the 0..2 range

  auto same = acc_cmd_param(gt, gt);
  CHECK(same.acc_cmd == 1.0);
  CHECK(same.acc_param == 1.0);

  CadModel pred = gt;
  pred.pairs[1].extrude.dist1 += 3;  // within tolerance
  pred.pairs[1].sketch.loops[0].curves[0] = Circle{{0, 0}, 16};  // radius off by 4
  auto a = acc_cmd_param(pred, gt);
  CHECK(a.acc_cmd == 1.0);
  const double gt_params = 8 + 11 + 3 + 11;
  CHECK(a.acc_param == doctest::Approx((gt_params - 1) / gt_params));

  pred = gt;
  pred.pairs[1].extrude.op = BooleanOp::Join;  // flags compare exactly
  CHECK(acc_cmd_param(pred, gt).acc_param == doctest::Approx((gt_params - 1) / gt_params));

  pred = gt;
  for (int k = 1; k <= 3; ++k) {
    pred.pairs.push_back(box_pair({0, 0, 0}, 5, 5, 5, BooleanOp::Join));
    const std::size_t extra = flatten_commands(pred).size() - flat.size();
    CHECK(acc_cmd_param(pred, gt).acc_cmd <= static_cast<double>(flat.size()) / (flat.size() + extra) + 1e-12);
  }

  pred = gt;
  pred.pairs.pop_back();
  a = acc_cmd_param(pred, gt);
  CHECK(a.acc_cmd == doctest::Approx(6.0 / 9));
  CHECK(a.acc_param == doctest::Approx(19.0 / gt_params));
}

TEST_CASE("exact match is order sensitive and ignores ids") {
  CadModel a = block_with_pegs(2, "a");
  CadModel b = block_with_pegs(2, "b");
  CHECK(exact_match(a, b));
  std::swap(b.pairs[1], b.pairs[2]);
  CHECK_FALSE(exact_match(a, b));
}

TEST_CASE("novel score") {
  std::unordered_set<std::string> train = {canonical_hash(plate_with_hole())};
  const auto s = novel_score({plate_with_hole(), block_with_pegs(4)}, train);
  CHECK(s.value == 0.5);
  CHECK(novel_score({}, train).empty_input);
}

TEST_CASE("text metrics") {
  const TextScores r = text_metrics("a b", {"a b c d"});
  CHECK(r.rouge_l == doctest::Approx(2.0 / 3));
  CHECK(r.bleu1 == doctest::Approx(std::exp(1.0 - 2.0)));
  CHECK(r.bleu4 == 0.0);
  const TextScores same = text_metrics("The round plate has four holes", {"the round plate has four holes"});
  CHECK(same.bleu1 == doctest::Approx(1.0));
  CHECK(same.bleu4 == doctest::Approx(1.0));
  CHECK(same.rouge_l == doctest::Approx(1.0));
  // Brevity penalty uses the closest reference length.
  const TextScores close = text_metrics("a b c", {"a b c d e f g h", "a b c d"});
  CHECK(close.bleu1 == doctest::Approx(std::exp(1.0 - 4.0 / 3)));
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("report has every key and marks missing metrics null") {
  ReportInputs in;
  in.generated = {plate_with_hole("g0"), std::nullopt};
  in.reference = {plate_with_hole("r0"), block_with_pegs(4, "r1")};
  in.aligned = true;
  in.training_hashes = std::unordered_set<std::string>{};
  ReportOptions o;
  o.resolution = 24;
  o.samples = 200;
  const auto j = report_to_json(compute_report(in, o));
  for (const char* k : {"COV", "MMD", "JSD", "SR", "Novel", "ACC_cmd", "ACC_param", "ACC_T", "MCD", "EM", "BLEU1",
                        "BLEU4", "ROUGE_L"}) {
    CHECK_MESSAGE(j.contains(k), k);
  }
  CHECK(j["SR"].get<double>() == doctest::Approx(50.0));
  CHECK(j["EM"].get<double>() == doctest::Approx(50.0));
  CHECK(j["MCD"].get<double>() == doctest::Approx(0.0));
  CHECK(j["BLEU1"].is_null());
  CHECK(j["counts"]["buildable"] == 1);
  CHECK(j["raw"]["SR"].get<double>() == doctest::Approx(0.5));
}
