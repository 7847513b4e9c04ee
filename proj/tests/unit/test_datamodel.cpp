#include <doctest.h>

#include <sstream>

#include "rere/datamodel.hpp"
#include "rere/errors.hpp"
#include "rere/log.hpp"

using namespace rere;

namespace {

std::vector<std::string> words(std::initializer_list<const char*> w) { return {w.begin(), w.end()}; }

RelationCatalog two_relations() {
  RelationCatalog c;
  c.add("/people/person/place_of_birth", "place of birth");
  c.add("/business/company/founders", "founders");
  return c;
}

struct SilenceWarnings {
  std::vector<std::string> seen;
  log::Sink previous;
  SilenceWarnings() {
    previous = log::set_warning_sink([this](std::string_view m) { seen.emplace_back(m); });
  }
  ~SilenceWarnings() { log::set_warning_sink(previous); }
};

}  // namespace

TEST_SUITE("datamodel") {
  TEST_CASE("tokenize keeps joined words and splits punctuation") {
    auto t = tokenize_words("Ada Lovelace was born in Newcastle-upon-Tyne.");
    CHECK(t == words({"Ada", "Lovelace", "was", "born", "in", "Newcastle-upon-Tyne", "."}));
    CHECK(tokenize_words("O'Neil paid 3.5 (approx)") == words({"O'Neil", "paid", "3.5", "(", "approx", ")"}));
    CHECK(tokenize_words("a , b") == words({"a", ",", "b"}));
    CHECK(tokenize_words("end-") == words({"end", "-"}));
  }

  TEST_CASE("tokenize reports offsets and indices") {
    auto t = tokenize("  ab, cd");
    REQUIRE(t.size() == 3);
    CHECK(t[0].offset == 2);
    CHECK(t[1].text == ",");
    CHECK(t[1].offset == 4);
    CHECK(t[2].index == 2);
    CHECK(t[2].offset == 6);
  }

  TEST_CASE("tokenize rejects empty text") {
    CHECK_THROWS_AS(tokenize(""), EmptyInput);
    CHECK_THROWS_AS(tokenize(" \t\n"), EmptyInput);
  }

  TEST_CASE("find_first returns the first occurrence") {
    auto hay = words({"a", "b", "a", "b"});
    auto needle = words({"a", "b"});
    CHECK(find_first(hay, needle) == Span{0, 1});
    CHECK_FALSE(find_first(hay, words({"c"})).has_value());
    CHECK_FALSE(find_first(hay, std::vector<std::string>{}).has_value());
  }

  TEST_CASE("span validity") {
    CHECK(Span{1, 2}.valid_for(3));
    CHECK_FALSE(Span{1, 3}.valid_for(3));
    CHECK_FALSE(Span{2, 1}.valid_for(5));
    CHECK(Span{4, 6}.length() == 3);
  }

  TEST_CASE("catalog ids are dense and names unique") {
    auto c = two_relations();
    CHECK(c.size() == 2);
    CHECK(c.id_of("/business/company/founders") == RelationId(1));
    CHECK(c.intern("/business/company/founders", "x") == RelationId(1));
    CHECK(c.intern("new", "new") == RelationId(2));
    CHECK_THROWS_AS(c.add("new", "again"), CatalogError);
    CHECK_THROWS_AS(c.add("", "q"), CatalogError);
    CHECK_THROWS_AS(c.add("q", ""), CatalogError);
    CHECK_THROWS_AS(c.id_of("missing"), CatalogError);
    CHECK_THROWS_AS(c.at(RelationId(9)), CatalogError);
  }

  TEST_CASE("catalog fingerprint depends on order") {
    RelationCatalog a, b;
    a.add("x", "x");
    a.add("y", "y");
    b.add("y", "y");
    b.add("x", "x");
    CHECK(a.fingerprint() != b.fingerprint());
  }

  TEST_CASE("instance triples dedupe and group") {
    LabeledInstance inst;
    inst.tokens = words({"a", "b", "c", "d"});
    CHECK(inst.is_na());
    CHECK(inst.add_triple({{0, 0}, RelationId(2), {1, 1}}));
    CHECK_FALSE(inst.add_triple({{0, 0}, RelationId(2), {1, 1}}));
    CHECK(inst.add_triple({{2, 2}, RelationId(2), {3, 3}}));
    CHECK(inst.add_triple({{0, 0}, RelationId(0), {3, 3}}));
    CHECK(inst.triples_for(RelationId(2)).size() == 2);
    CHECK(inst.relations() == std::vector<RelationId>{RelationId(0), RelationId(2)});
  }

  TEST_CASE("surface text of relation labels") {
    CHECK(surface_text("/people/person/place_of_birth") == "place of birth");
    CHECK(surface_text("Birthplace") == "Birthplace");
    CHECK(surface_text("trailing/") == "trailing/");
  }

  TEST_CASE("NYT import resolves entities and builds the catalog") {
    SilenceWarnings quiet;
    std::istringstream in(
        R"({"sentText": "Bill Gates founded Microsoft in Albuquerque .", "relationMentions": [{"em1Text": "Bill Gates", "em2Text": "Microsoft", "label": "/business/person/company"}, {"em1Text": "Steve", "em2Text": "Microsoft", "label": "/business/person/company"}]})"
        "\n\n"
        R"({"sentText": "Nothing here .", "relationMentions": [{"em1Text": "a", "em2Text": "b", "label": "None"}]})"
        "\n");
    ImportStats stats;
    auto ds = import_nyt_jsonl(in, &stats);
    REQUIRE(ds.size() == 2);
    CHECK(ds.catalog.size() == 1);
    CHECK(ds.catalog.at(RelationId(0)).query == "company");
    REQUIRE(ds.instances[0].triples.size() == 1);
    CHECK(ds.instances[0].triples[0].subject == Span{0, 1});
    CHECK(ds.instances[0].triples[0].object == Span{3, 3});
    CHECK(ds.instances[1].is_na());
    CHECK(stats.lines == 2);
    CHECK(stats.mentions == 3);
    CHECK(stats.unresolved_mentions == 1);
    CHECK(stats.na_mentions == 1);
    CHECK(quiet.seen.size() == 1);
  }

  TEST_CASE("NYT import reports the failing line") {
    std::istringstream in("{\"sentText\": \"a b\"}\n{not json\n");
    try {
      import_nyt_jsonl(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("line 2") == 0);
    }
    std::istringstream missing("{\"relationMentions\": []}\n");
    CHECK_THROWS_AS(import_nyt_jsonl(missing), ParseError);
  }

  TEST_CASE("canonical JSONL round trip") {
    Dataset ds;
    ds.catalog = two_relations();
    LabeledInstance a;
    a.tokens = words({"Bill", "Gates", "founded", "Microsoft"});
    a.add_triple({{0, 1}, RelationId(1), {3, 3}});
    LabeledInstance b;
    b.tokens = words({"nothing"});
    ds.instances = {a, b};
    std::stringstream buf;
    write_canonical(ds, buf);
    auto back = read_canonical(buf, ds.catalog);
    CHECK(back == ds);

    std::stringstream again;
    write_canonical(ds, again);
    auto inferred = read_canonical(again);
    CHECK(inferred.catalog.size() == 1);  // only relations that occur
    REQUIRE(inferred.size() == 2);
    CHECK(inferred.instances[0].tokens == a.tokens);
    REQUIRE(inferred.instances[0].triples.size() == 1);
    CHECK(inferred.catalog.at(inferred.instances[0].triples[0].relation).name == ds.catalog.at(RelationId(1)).name);
    CHECK(inferred.instances[1].is_na());
  }

  TEST_CASE("canonical reader validates fields") {
    auto cat = two_relations();
    std::istringstream unknown(R"({"tokens": ["a","b"], "triples": [{"subject": [0,0], "relation": "zzz", "object": [1,1]}]})");
    CHECK_THROWS_AS(read_canonical(unknown, cat), CatalogError);
    std::istringstream backwards(
        R"({"tokens": ["a","b"], "triples": [{"subject": [1,0], "relation": "/business/company/founders", "object": [1,1]}]})");
    CHECK_THROWS_AS(read_canonical(backwards, cat), ParseError);
    std::istringstream outside(
        R"({"tokens": ["a","b"], "triples": [{"subject": [0,0], "relation": "/business/company/founders", "object": [1,2]}]})");
    CHECK_THROWS_AS(read_canonical(outside, cat), ParseError);
    std::istringstream no_tokens(R"({"triples": []})");
    CHECK_THROWS_AS(read_canonical(no_tokens, cat), ParseError);
  }

  TEST_CASE("catalog file round trip") {
    auto cat = two_relations();
    std::stringstream buf;
    write_catalog(cat, buf);
    CHECK(read_catalog(buf) == cat);
    std::istringstream sparse(R"([{"id": 1, "name": "a", "query": "a"}])");
    CHECK_THROWS_AS(read_catalog(sparse), ParseError);
  }

  TEST_CASE("predictions keep scores") {
    PredictionSet p;
    p.catalog = two_relations();
    p.instances.push_back({words({"x", "y"}), {{{{0, 0}, RelationId(0), {1, 1}}, 0.25}}});
    std::stringstream buf;
    write_predictions(p, buf);
    CHECK(read_predictions(buf, p.catalog) == p);
  }

  TEST_CASE("gold as predictions carries score one") {
    Dataset ds;
    ds.catalog = two_relations();
    LabeledInstance a;
    a.tokens = words({"x", "y"});
    a.add_triple({{0, 0}, RelationId(0), {1, 1}});
    ds.instances = {a};
    auto p = as_predictions(ds);
    REQUIRE(p.instances[0].triples.size() == 1);
    CHECK(p.instances[0].triples[0].score == 1.0);
  }

  TEST_CASE("dataset validation") {
    Dataset ds;
    ds.catalog = two_relations();
    LabeledInstance a;
    a.tokens = words({"x", "y"});
    a.triples.push_back({{0, 0}, RelationId(5), {1, 1}});
    ds.instances = {a};
    CHECK_THROWS_AS(ds.validate(), CatalogError);
    ds.instances[0].triples[0] = {{0, 3}, RelationId(0), {1, 1}};
    CHECK_THROWS_AS(ds.validate(), ParseError);
    ds.instances[0].triples[0] = {{0, 0}, RelationId(0), {1, 1}};
    CHECK_NOTHROW(ds.validate());
    CHECK(ds.mean_length() == 2.0);
    CHECK(ds.triple_count() == 1);
  }
}
