#include <doctest.h>

#include <random>

#include "spcc/segmenter.hpp"
#include "support/model_gen.hpp"

using namespace spcc;
using namespace spcc::testing;

TEST_CASE("a run of four identical pairs collapses") {
  const auto comps = segment(block_with_pegs(4));
  REQUIRE(comps.size() == 2);
  CHECK(comps[0] == Component{0, 1});
  CHECK(comps[1] == Component{1, 4});
}

TEST_CASE("a run of three identical pairs stays expanded") {
  const auto comps = segment(block_with_pegs(3));
  REQUIRE(comps.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(comps[i] == Component{i, 1});
}

TEST_CASE("threshold is configurable") {
  CHECK(segment(block_with_pegs(3), 2).size() == 2);
  CHECK(segment(block_with_pegs(4), 4).size() == 5);
}

TEST_CASE("a differing pair breaks a run") {
  CadModel m = block_with_pegs(5);
  m.pairs[3].extrude.dist1 += 1;
  const auto comps = segment(m);
  // pegs 1-2, changed peg, pegs 4-5: no run longer than three
  CHECK(comps.size() == 6);
}

TEST_CASE("segmentation partitions the pairs in order") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 300; ++t) {
    GenOptions o;
    o.repeat_probability = 0.6;
    const CadModel m = random_model(rng, o);
    const auto comps = segment(m);
    std::size_t next = 0;
    for (const auto& c : comps) {
      CHECK(c.first == next);
      CHECK(c.multiplicity >= 1);
      if (c.multiplicity > 1) {
        CHECK(c.multiplicity > 3);
        for (std::size_t i = c.first + 1; i < c.end(); ++i) {
          CHECK(pairs_equivalent_mod_origin(m.pairs[c.first], m.pairs[i]));
        }
      }
      next = c.end();
    }
    CHECK(next == m.pairs.size());
  }
}

TEST_CASE("take and remove components") {
  const CadModel m = block_with_pegs(4);
  const auto comps = segment(m);
  CHECK(remove_component(m, comps, 1).pairs.size() == 1);
  CHECK(take_components(m, comps, {1}).pairs.size() == 4);
  CHECK(&representative(m, comps[1]) == &m.pairs[1]);
}

TEST_CASE("extrusion direction labels") {
  auto label = [](std::array<int, 3> orient) {
    SketchExtrudePair p = box_pair({0, 0, 0}, 10, 10, 10);
    p.extrude.orient = orient;
    return extrusion_direction_label(p);
  };
  CHECK(label({0, 0, 0}) == Direction::Up);
  CHECK(label({0, 180, 0}) == Direction::Down);
  CHECK(label({0, 90, 0}) == Direction::Right);
  CHECK(label({0, -90, 0}) == Direction::Left);
  CHECK(label({0, 0, -90}) == Direction::Back);
  CHECK(label({0, 0, 90}) == Direction::Front);
  CHECK(label({0, 4, 0}) == Direction::Up);
  CHECK_FALSE(label({0, 45, 0}).has_value());
  CHECK(std::string(to_string(Direction::Up)) == "up");
}
