#include <doctest.h>

#include "fixtures.hpp"
#include "oracles/decode_oracle.hpp"
#include "rere/entity_extractor.hpp"
#include "rere/errors.hpp"

using namespace rere;
using fixtures::words;

namespace {

// Rows given as strings over {s,S,o,O,.}: s subject start, S subject end,
// o object start, O object end. A row may carry several letters.
nn::Matrix grid_of(std::initializer_list<const char*> rows) {
  nn::Matrix g = nn::Matrix::Constant(static_cast<Eigen::Index>(rows.size()), 4, 0.1);
  Eigen::Index i = 0;
  for (const char* r : rows) {
    for (const char* c = r; *c; ++c) {
      switch (*c) {
        case 's': g(i, 0) = 0.9; break;
        case 'S': g(i, 1) = 0.9; break;
        case 'o': g(i, 2) = 0.9; break;
        case 'O': g(i, 3) = 0.9; break;
        default: break;
      }
    }
    ++i;
  }
  return g;
}

using PairSpans = std::vector<std::pair<Span, Span>>;

PairSpans spans_of(const std::vector<ExtractedPair>& pairs) {
  PairSpans out;
  for (const auto& p : pairs) out.emplace_back(p.subject, p.object);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("entity_extractor") {
  TEST_CASE("single subject and object") {
    auto pairs = decode_spans(grid_of({"s", "S", ".", "o", "O"}), 0.5);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].subject == Span{0, 1});
    CHECK(pairs[0].object == Span{3, 4});
    CHECK(pairs[0].score == doctest::Approx(0.9 * 0.9 * 0.9 * 0.9));
  }

  TEST_CASE("one subject owns several objects") {
    auto pairs = decode_spans(grid_of({"sS", "oO", ".", "oO"}), 0.5);
    CHECK(spans_of(pairs) == PairSpans{{{0, 0}, {1, 1}}, {{0, 0}, {3, 3}}});
  }

  TEST_CASE("a subject without objects in its window takes the nearest following one") {
    auto pairs = decode_spans(grid_of({"sS", "sS", "oO"}), 0.5);
    CHECK(spans_of(pairs) == PairSpans{{{0, 0}, {2, 2}}, {{1, 1}, {2, 2}}});
  }

  TEST_CASE("objects before the first subject attach to it") {
    auto pairs = decode_spans(grid_of({"oO", ".", "sS"}), 0.5);
    CHECK(spans_of(pairs) == PairSpans{{{2, 2}, {0, 0}}});
  }

  TEST_CASE("overlapping subject and object on the same token") {
    auto pairs = decode_spans(grid_of({"sSoO"}), 0.5);
    CHECK(spans_of(pairs) == PairSpans{{{0, 0}, {0, 0}}});
  }

  TEST_CASE("unmatched marks are dropped") {
    CHECK(decode_spans(grid_of({"s", ".", "s", "S"}), 0.5).empty());
    CHECK(decode_spans(grid_of({"S", "oO"}), 0.5).empty());
    auto pairs = decode_spans(grid_of({"s", "sS", "oO"}), 0.5);
    CHECK(spans_of(pairs) == PairSpans{{{1, 1}, {2, 2}}});
  }

  TEST_CASE("marks use greater-or-equal") {
    nn::Matrix g = nn::Matrix::Constant(1, 4, 0.5);
    CHECK(decode_spans(g, 0.5).size() == 1);
    CHECK(decode_spans(g, 0.5000001).empty());
    CHECK_THROWS_AS(decode_spans(nn::Matrix::Zero(3, 3), 0.5), ShapeError);
  }

  TEST_CASE("decoder agrees with the brute-force oracle on random grids") {
    nn::Rng rng(21);
    for (int trial = 0; trial < 3000; ++trial) {
      const auto n = static_cast<Eigen::Index>(1 + rng.below(10));
      nn::Matrix g(n, 4);
      for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.bernoulli(0.3) ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.5);
      auto got = decode_spans(g, 0.5);
      auto want = oracle::decode(g, 0.5);
      oracle::sort_pairs(got);
      oracle::sort_pairs(want);
      CHECK(got == want);
    }
  }

  TEST_CASE("pairs only use cells at or above the threshold") {
    nn::Rng rng(5);
    for (int trial = 0; trial < 500; ++trial) {
      nn::Matrix g(8, 4);
      for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.uniform();
      const double thr = rng.uniform(0.2, 0.9);
      for (const auto& p : decode_spans(g, thr)) {
        for (double b : p.boundary) CHECK(b >= thr);
        CHECK(p.score >= std::pow(thr, 4));
        CHECK(p.subject.start <= p.subject.end);
        CHECK(p.object.start <= p.object.end);
      }
    }
  }

  TEST_CASE("raising the threshold can add a pair") {
    // At 0.5 the start at row 1 blocks the start at row 0 from reaching the
    // end at row 2, so only (1,2) is a subject. At 0.7 row 1 is no longer a
    // start and (0,2) appears.
    nn::Matrix g = nn::Matrix::Constant(4, 4, 0.1);
    g(0, 0) = 0.9;
    g(1, 0) = 0.6;
    g(2, 1) = 0.9;
    g(3, 2) = 0.9;
    g(3, 3) = 0.9;
    const auto low = spans_of(decode_spans(g, 0.5));
    const auto high = spans_of(decode_spans(g, 0.7));
    CHECK(low == PairSpans{{{1, 2}, {3, 3}}});
    CHECK(high == PairSpans{{{0, 2}, {3, 3}}});
  }

  TEST_CASE("zero heads give one half everywhere") {
    EntityExtractor ee(fixtures::two_relations(), fixtures::tiny_encoder(), 1);
    ee.weights().value.setZero();
    auto sent = words({"Ann", "was", "born", "in", "Rome"});
    auto g = ee.score_pointers(RelationId(0), sent);
    CHECK(g.length() == sent.size());
    CHECK(g.grid.cols() == 4);
    CHECK((g.grid.array() == 0.5).all());
  }

  TEST_CASE("query tokens come from the catalog surface text") {
    EntityExtractor ee(fixtures::two_relations(), fixtures::tiny_encoder(), 1);
    CHECK(ee.query_tokens(RelationId(1)) == words({"works", "for"}));
    CHECK_THROWS_AS(ee.query_tokens(RelationId(2)), CatalogError);
    CHECK_THROWS_AS(ee.score_pointers(RelationId(5), words({"Ann"})), CatalogError);
  }

  TEST_CASE("different queries give different grids") {
    EntityExtractor ee(fixtures::two_relations(), fixtures::tiny_encoder(), 1);
    auto sent = words({"Ann", "works", "for", "Acme"});
    auto a = ee.score_pointers(RelationId(0), sent).grid;
    auto b = ee.score_pointers(RelationId(1), sent).grid;
    CHECK((a - b).norm() > 1e-9);
  }

  TEST_CASE("truncated rows score zero") {
    fixtures::CaptureWarnings quiet;
    auto vocab = Vocabulary::from_tokens(words({"a", "born", "in"}));
    EncoderConfig cfg;
    cfg.vocab_size = vocab.size();
    cfg.embedding_dim = cfg.hidden_dim = 4;
    cfg.max_length = 8;
    EntityExtractor ee(fixtures::two_relations(), std::make_unique<RecurrentEncoder>(cfg, vocab), 1);
    std::vector<std::string> sent(6, "a");
    auto g = ee.score_pointers(RelationId(0), sent).grid;
    REQUIRE(g.rows() == 6);
    CHECK((g.bottomRows(3).array() == 0.0).all());
    CHECK((g.topRows(3).array() > 0.0).all());
  }

  TEST_CASE("extract queries once per requested relation") {
    EntityExtractor ee(fixtures::two_relations(), fixtures::tiny_encoder(), 1);
    auto sent = words({"Ann", "works", "for", "Acme"});
    std::vector<RelationId> none, one{RelationId(1)}, both{RelationId(0), RelationId(1)};
    ee.extract(none, sent);
    CHECK(ee.invocation_count() == 0);
    ee.extract(one, sent);
    CHECK(ee.invocation_count() == 1);
    ee.extract(both, sent);
    CHECK(ee.invocation_count() == 3);
    ee.reset_invocation_count();
    CHECK(ee.invocation_count() == 0);
  }

  TEST_CASE("extractions carry the queried relation") {
    EntityExtractor ee(fixtures::two_relations(), fixtures::tiny_encoder(), 1);
    ee.weights().value.setZero();
    ee.bias().value.setConstant(5.0);
    std::vector<RelationId> rel{RelationId(1)};
    auto out = ee.extract(rel, words({"Ann", "Bob"}));
    REQUIRE_FALSE(out.empty());
    for (const auto& e : out) CHECK(e.triple.relation == RelationId(1));
  }

  TEST_CASE("uninitialized extractor") {
    EntityExtractor ee;
    CHECK_THROWS_AS(ee.score_pointers(RelationId(0), words({"a"})), ModelStateError);
    CHECK_THROWS_AS(ee.parameters(), ModelStateError);
  }
}
