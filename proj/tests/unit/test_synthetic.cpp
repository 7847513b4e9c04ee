#include <doctest.h>

#include <set>

#include "rere/errors.hpp"
#include "rere/synthetic.hpp"

using namespace rere;

TEST_SUITE("synthetic") {
  TEST_CASE("corpus shape") {
    auto c = synthetic::generate({400, 50, 60, 3});
    CHECK(c.catalog.size() == 8);
    CHECK(c.train.size() == 400);
    CHECK(c.dev.size() == 50);
    CHECK(c.test.size() == 60);
    CHECK(c.train.catalog == c.catalog);
    CHECK_NOTHROW(c.train.validate());
    CHECK_NOTHROW(c.test.validate());
    bool overlapping = false;
    for (const auto& inst : c.train.instances) {
      CHECK(inst.triples.size() >= 1);
      CHECK(inst.triples.size() <= 3);
      std::set<Span> subjects;
      for (const auto& t : inst.triples) overlapping = overlapping || !subjects.insert(t.subject).second;
    }
    CHECK(overlapping);
  }

  TEST_CASE("every relation occurs") {
    auto c = synthetic::generate({500, 0, 0, 9});
    std::set<RelationId> seen;
    for (const auto& inst : c.train.instances)
      for (auto r : inst.relations()) seen.insert(r);
    CHECK(seen.size() == 8);
  }

  TEST_CASE("deterministic under the seed") {
    CHECK(synthetic::generate({50, 5, 5, 1}).train == synthetic::generate({50, 5, 5, 1}).train);
    CHECK_FALSE(synthetic::generate({50, 5, 5, 1}).train == synthetic::generate({50, 5, 5, 2}).train);
  }
}
