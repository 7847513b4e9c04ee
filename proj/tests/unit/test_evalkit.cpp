#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "rere/errors.hpp"
#include "rere/evalkit.hpp"

using namespace rere;
using doctest::Approx;

namespace {

Triple tr(std::size_t s0, std::size_t s1, int r, std::size_t o0, std::size_t o1) {
  return {{s0, s1}, RelationId(r), {o0, o1}};
}

Dataset gold_set() {
  Dataset g;
  g.catalog = fixtures::two_relations();
  LabeledInstance a;
  a.tokens = fixtures::words({"Ann", "Lee", "was", "born", "in", "New", "York"});
  a.add_triple(tr(0, 1, 0, 5, 6));
  LabeledInstance b;
  b.tokens = fixtures::words({"Bob", "works", "for", "Acme"});
  b.add_triple(tr(0, 0, 1, 3, 3));
  g.instances = {a, b};
  return g;
}

PredictionSet empty_predictions(const Dataset& g) {
  PredictionSet p;
  p.catalog = g.catalog;
  for (const auto& inst : g.instances) p.instances.push_back({inst.tokens, {}});
  return p;
}

}  // namespace

TEST_SUITE("evalkit") {
  TEST_CASE("metric conventions for empty counts") {
    auto r = eval::MetricsReport::from_counts({0, 0, 0});
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
    auto s = eval::MetricsReport::from_counts({3, 1, 2});
    CHECK(s.precision == Approx(0.75));
    CHECK(s.recall == Approx(0.6));
    CHECK(s.f1 == Approx(2 * 0.75 * 0.6 / 1.35));
  }

  TEST_CASE("partial match credits last tokens, exact does not") {
    std::vector<Triple> gold{tr(0, 1, 0, 5, 6)};
    std::vector<Triple> pred{tr(1, 1, 0, 6, 6)};
    CHECK(eval::match_sentence(pred, gold, eval::MatchMode::kPartial) == eval::Counts{1, 0, 0});
    CHECK(eval::match_sentence(pred, gold, eval::MatchMode::kExact) == eval::Counts{0, 1, 1});
    std::vector<Triple> wrong_rel{tr(0, 1, 1, 5, 6)};
    CHECK(eval::match_sentence(wrong_rel, gold, eval::MatchMode::kPartial).tp == 0);
  }

  TEST_CASE("duplicates are removed and partial matching is one-to-one") {
    std::vector<Triple> gold{tr(0, 1, 0, 5, 6)};
    std::vector<Triple> pred{tr(0, 1, 0, 5, 6), tr(0, 1, 0, 5, 6), tr(1, 1, 0, 6, 6)};
    CHECK(eval::match_sentence(pred, gold, eval::MatchMode::kExact) == eval::Counts{1, 1, 0});
    CHECK(eval::match_sentence(pred, gold, eval::MatchMode::kPartial) == eval::Counts{1, 1, 0});
  }

  TEST_CASE("exact true positives never exceed partial ones") {
    nn::Rng rng(4);
    auto random_triple = [&] {
      auto s0 = rng.below(4), o0 = rng.below(4);
      return tr(s0, s0 + rng.below(2), static_cast<int>(rng.below(2)), o0, o0 + rng.below(2));
    };
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<Triple> p, g;
      for (std::size_t k = rng.below(4); k > 0; --k) p.push_back(random_triple());
      for (std::size_t k = rng.below(4); k > 0; --k) g.push_back(random_triple());
      auto e = eval::match_sentence(p, g, eval::MatchMode::kExact);
      auto q = eval::match_sentence(p, g, eval::MatchMode::kPartial);
      CHECK(e.tp <= q.tp);
      CHECK(e.tp + e.fp == q.tp + q.fp);
      CHECK(e.tp + e.fn == q.tp + q.fn);
    }
  }

  TEST_CASE("gold as predictions scores perfectly") {
    auto g = gold_set();
    auto r = eval::score(as_predictions(g), g, eval::MatchMode::kExact);
    CHECK(r.f1 == 1.0);
    CHECK(r.counts == eval::Counts{2, 0, 0});
    auto none = eval::score(empty_predictions(g), g, eval::MatchMode::kExact);
    CHECK(none.counts == eval::Counts{0, 0, 2});
  }

  TEST_CASE("prediction relations map by name") {
    auto g = gold_set();
    auto p = empty_predictions(g);
    p.catalog = RelationCatalog{};
    p.catalog.add("works_for", "w");
    p.instances[1].triples.push_back({tr(0, 0, 0, 3, 3), 0.9});
    CHECK(eval::score(p, g, eval::MatchMode::kExact).counts == eval::Counts{1, 0, 1});
    p.catalog.add("founded", "f");
    p.instances[0].triples.push_back({tr(0, 0, 1, 3, 3), 0.9});
    CHECK_THROWS_AS(eval::score(p, g, eval::MatchMode::kExact), CatalogError);
  }

  TEST_CASE("misaligned predictions are rejected") {
    auto g = gold_set();
    auto p = empty_predictions(g);
    p.instances.pop_back();
    CHECK_THROWS_AS(eval::score(p, g, eval::MatchMode::kExact), AlignmentError);
    p = empty_predictions(g);
    p.instances[0].tokens[0] = "Anne";
    CHECK_THROWS_AS(eval::score(p, g, eval::MatchMode::kPartial), AlignmentError);
  }

  TEST_CASE("pr curve") {
    auto g = gold_set();
    auto p = empty_predictions(g);
    p.instances[0].triples = {{tr(0, 1, 0, 5, 6), 0.9}, {tr(0, 1, 1, 5, 6), 0.3}};
    p.instances[1].triples = {{tr(0, 0, 1, 3, 3), 0.6}};
    auto curve = eval::pr_curve(p, g, eval::MatchMode::kExact, 10);
    REQUIRE(curve.size() == 4);
    CHECK(curve.front().threshold == 0.0);
    CHECK(curve.front().recall == 1.0);
    CHECK(curve.front().precision == Approx(2.0 / 3.0));
    CHECK(curve.back().threshold == 0.9);
    CHECK(curve.back().precision == 1.0);
    CHECK(curve.back().recall == 0.5);
    for (std::size_t i = 1; i < curve.size(); ++i) {
      CHECK(curve[i].threshold > curve[i - 1].threshold);
      CHECK(curve[i].recall <= curve[i - 1].recall);
    }
    std::ostringstream csv;
    eval::write_pr_csv(curve, csv);
    CHECK(csv.str().rfind("threshold,precision,recall\n", 0) == 0);
    CHECK(eval::pr_curve(empty_predictions(g), g, eval::MatchMode::kExact, 5).size() == 1);
  }

  TEST_CASE("robustness sweep") {
    auto g = gold_set();
    std::vector<eval::FnVariant> variants{{0.0, g}, {0.5, g}};
    std::vector<pu::LossKind> losses{pu::LossKind::kCollectivePu, pu::LossKind::kBce};
    int calls = 0;
    auto trainer = [&](const Dataset& train, pu::LossKind loss) {
      ++calls;
      auto p = as_predictions(g);
      if (&train == &variants[1].train && loss == pu::LossKind::kBce) p.instances[1].triples.clear();
      return p;
    };
    auto report = eval::robustness_sweep(variants, g, trainer, losses, eval::MatchMode::kExact);
    CHECK(calls == 4);
    REQUIRE(report.rows.size() == 4);
    CHECK(report.rows[1].fn_rate == 0.0);
    CHECK(report.rows[1].loss == pu::LossKind::kBce);
    CHECK(report.at(0.5, pu::LossKind::kCollectivePu).delta_f1 == 0.0);
    CHECK(report.at(0.5, pu::LossKind::kBce).delta_f1 == Approx(1.0 - 2.0 / 3.0));
    CHECK_THROWS_AS(report.at(0.3, pu::LossKind::kBce), ConfigError);
    std::ostringstream csv;
    eval::write_robustness_csv(report, csv);
    CHECK(csv.str().find("0.5,bce,") != std::string::npos);
    CHECK(eval::robustness_json(report, -1).find("\"delta_f1\"") != std::string::npos);

    std::vector<eval::FnVariant> no_zero{{0.3, g}};
    CHECK_THROWS_AS(eval::robustness_sweep(no_zero, g, trainer, losses, eval::MatchMode::kExact), ConfigError);
  }

  TEST_CASE("match mode parsing") {
    CHECK(eval::parse_match_mode("exact") == eval::MatchMode::kExact);
    CHECK(eval::to_string(eval::MatchMode::kPartial) == "partial");
    CHECK_THROWS_AS(eval::parse_match_mode("fuzzy"), ConfigError);
  }
}
