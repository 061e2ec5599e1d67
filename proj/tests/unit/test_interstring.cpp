#include <algorithm>
#include <random>

#include "doctest.h"
#include "support/interstring_oracle.hpp"
#include "synchronic/error.hpp"
#include "synchronic/interstring/dag.hpp"
#include "synchronic/interstring/interstring.hpp"

using namespace synchronic;
using namespace synchronic::interstring;

TEST_CASE("parse: layers and cells") {
  const auto a = parse_interstring("t add a b\nr mul t t");
  REQUIRE(a.layers.size() == 2);
  CHECK(a.layers[0].cells.size() == 1);
  CHECK(a.layers[0].cells[0].symbols.size() == 4);
  CHECK(a.layers[1].cells[0].symbols == std::vector<std::string>{"r", "mul", "t", "t"});

  const auto b = parse_interstring("x mov 7 ; y mov 9\ns add x y");
  REQUIRE(b.layers.size() == 2);
  CHECK(b.layers[0].cells.size() == 2);
  CHECK(b.layers[1].cells.size() == 1);

  const auto c = parse_interstring("# header\n\n  t add a b   # trailing\n\n");
  CHECK(c.layers.size() == 1);
}

TEST_CASE("parse: errors") {
  CHECK_THROWS_WITH_AS(parse_interstring("q add a b c d", 4), doctest::Contains("cell length 6 > 4"),
                       ParseError);
  CHECK_THROWS_AS(parse_interstring("a mov 1 ;"), ParseError);
  CHECK_THROWS_AS(parse_interstring("a mov 1 ; ; b mov 2"), ParseError);
  CHECK_THROWS_AS(parse_interstring("a mov $x"), ParseError);
  CHECK_NOTHROW(parse_interstring("q add a b c d", 6));
}

TEST_CASE("print/parse roundtrip") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Interstring is = testing::random_interstring(rng);
    const Interstring back = parse_interstring(print(is));
    CHECK(back == is);
    CHECK(print(back) == print(is));
  }
}

TEST_CASE("validate: findings") {
  const auto alg = Algebra::standard(32);
  const auto dup = validate(parse_interstring("a mov 1 ; a mov 2"), {}, &alg);
  CHECK(dup.count(FindingKind::DuplicateDestination) == 1);
  CHECK(dup.findings[0].name == "a");
  CHECK(dup.findings[0].layer == 1);

  const auto undef = validate(parse_interstring("r add x y"), {}, &alg);
  CHECK(undef.count(FindingKind::UndefinedSource) == 2);

  CHECK(validate(parse_interstring("t add a b\nr mul t t"), {"a", "b"}, &alg).clean());

  const auto same = validate(parse_interstring("t add a b ; r mul t t"), {"a", "b"}, &alg);
  CHECK(same.count(FindingKind::SameLayerRead) == 2);

  // reading a same-layer destination that already existed is a pre-layer read
  CHECK(validate(parse_interstring("x mov y ; y mov x"), {"x", "y"}, &alg).clean());

  const auto arity = validate(parse_interstring("t not a b ; u frob a"), {"a", "b"}, &alg);
  CHECK(arity.count(FindingKind::ArityMismatch) == 1);
  CHECK(arity.count(FindingKind::UnknownOperator) == 1);

  const auto lit = validate(parse_interstring("5 mov a"), {"a"}, &alg);
  CHECK(lit.count(FindingKind::LiteralDestination) == 1);
  CHECK(validate(parse_interstring("x"), {}).count(FindingKind::MissingOperator) == 1);
}

TEST_CASE("evaluate: examples") {
  const auto alg = Algebra::standard(32);
  auto env = evaluate(parse_interstring("t add a b\nr mul t t"), alg, {{"a", 2}, {"b", 3}});
  CHECK(env.at("r") == 25);
  CHECK(env.at("t") == 5);

  env = evaluate(parse_interstring("x mov y ; y mov x"), alg, {{"x", 1}, {"y", 2}});
  CHECK(env.at("x") == 2);
  CHECK(env.at("y") == 1);

  env = evaluate(parse_interstring(testing::doubling_chain(4)), alg, {{"x0", 1}});
  CHECK(env.at("x4") == 16);
}

TEST_CASE("evaluate: modular arithmetic and errors") {
  const auto alg8 = Algebra::standard(8);
  auto env = evaluate(parse_interstring("a add x 1 ; b sub 0 x ; c not x ; d shl x 9 ; e lt x 300"), alg8,
                      {{"x", 255}});
  CHECK(env.at("a") == 0);
  CHECK(env.at("b") == 1);
  CHECK(env.at("c") == 0);
  CHECK(env.at("d") == 0);
  CHECK(env.at("e") == 0);  // 300 mod 256 = 44
  CHECK_THROWS_AS(evaluate(parse_interstring("a frob x"), alg8, {{"x", 1}}), Error);
  CHECK_THROWS_AS(evaluate(parse_interstring("a add x"), alg8, {{"x", 1}}), Error);
  CHECK_THROWS_AS(evaluate(parse_interstring("a add x y"), alg8, {{"x", 1}}), Error);
}

TEST_CASE("evaluate agrees with naive tree evaluation on random DAGs") {
  std::mt19937_64 rng(2024);
  const auto alg = Algebra::standard(16);
  for (int trial = 0; trial < 300; ++trial) {
    const Interstring is = testing::random_interstring(rng);
    Environment env;
    for (int i = 0; i < 4; ++i) env["in" + std::to_string(i)] = rng() & 0xffff;
    REQUIRE(validate(is, {"in0", "in1", "in2", "in3"}, &alg).clean());
    const Environment result = evaluate(is, alg, env);
    // the final value of each name is defined by its last writer
    for (const auto& [name, value] : result) {
      const auto def = testing::find_def(is, name, is.layers.size());
      const auto expect = def ? testing::tree_eval(is, alg, env, *def) : env.at(name);
      CHECK(value == expect);
    }
  }
}

TEST_CASE("layer permutation invariance") {
  std::mt19937_64 rng(77);
  const auto alg = Algebra::standard(16);
  for (int trial = 0; trial < 200; ++trial) {
    Interstring is = testing::random_interstring(rng);
    const Environment env{{"in0", 3}, {"in1", 5}, {"in2", 7}, {"in3", 11}};
    const auto expect = evaluate(is, alg, env);
    for (auto& layer : is.layers) std::shuffle(layer.cells.begin(), layer.cells.end(), rng);
    CHECK(evaluate(is, alg, env) == expect);
  }
}

TEST_CASE("dag: metrics examples") {
  const auto shared = to_dag(parse_interstring("t add a b\nr mul t t"));
  CHECK(shared.cells == 2);
  CHECK(shared.depth == 2);
  CHECK(shared.width == 1);
  CHECK(shared.edges.size() == 2);
  CHECK(shared.nodes[1].tree_size == 7);
  CHECK(shared.tree_expansion_size == 7);

  const auto single = to_dag(parse_interstring("r add a b"));
  CHECK(single.depth == 1);
  CHECK(single.width == 1);
  CHECK(single.cells == 1);
  CHECK(single.tree_expansion_size == 3);

  const auto wide = to_dag(parse_interstring("x mov 7 ; y mov 9\ns add x y"));
  CHECK(wide.width == 2);
  CHECK(wide.tree_expansion_size == 5);
}

TEST_CASE("dag: sharing linearity on the doubling chain") {
  for (int d = 1; d <= 16; ++d) {
    const auto is = parse_interstring(testing::doubling_chain(d));
    const auto view = to_dag(is);
    CHECK(view.cells == static_cast<std::size_t>(d));
    CHECK(view.depth == static_cast<std::uint64_t>(d));
    CHECK(view.tree_expansion_size == (std::uint64_t{1} << (d + 1)) - 1);
    CHECK(testing::tree_count(is, {static_cast<std::size_t>(d - 1), 0}) == view.tree_expansion_size);
  }
}

TEST_CASE("dag: memoized tree sizes match unmemoized expansion") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Interstring is = testing::random_interstring(rng);
    const auto view = to_dag(is);
    for (const auto& node : view.nodes) {
      CHECK(node.tree_size == testing::tree_count(is, {node.layer, node.cell}));
    }
  }
}

TEST_CASE("dag: metrics text") {
  const auto text = format_metrics(to_dag(parse_interstring("t add a b\nr mul t t")));
  CHECK(text.find("cells=2\n") != std::string::npos);
  CHECK(text.find("tree_expansion_size=7\n") != std::string::npos);
}
