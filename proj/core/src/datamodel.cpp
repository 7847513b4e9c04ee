#include "rere/datamodel.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rere/errors.hpp"
#include "rere/log.hpp"

namespace rere {

using json = nlohmann::json;

// --- LabeledInstance -----------------------------------------------------

std::vector<Triple> LabeledInstance::triples_for(RelationId relation) const {
  std::vector<Triple> out;
  for (const auto& t : triples)
    if (t.relation == relation) out.push_back(t);
  return out;
}

std::vector<RelationId> LabeledInstance::relations() const {
  std::vector<RelationId> out;
  out.reserve(triples.size());
  for (const auto& t : triples) out.push_back(t.relation);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool LabeledInstance::add_triple(const Triple& triple) {
  if (std::find(triples.begin(), triples.end(), triple) != triples.end()) return false;
  triples.push_back(triple);
  return true;
}

// --- RelationCatalog -----------------------------------------------------

RelationId RelationCatalog::add(std::string name, std::string query) {
  if (name.empty()) throw CatalogError("relation name must be non-empty");
  if (query.empty()) throw CatalogError("relation '" + name + "' has an empty query");
  if (find(name)) throw CatalogError("duplicate relation name '" + name + "'");
  RelationId id(entries_.size());
  entries_.push_back({id, std::move(name), std::move(query)});
  return id;
}

RelationId RelationCatalog::intern(const std::string& name, const std::string& query) {
  if (auto id = find(name)) return *id;
  return add(name, query);
}

std::optional<RelationId> RelationCatalog::find(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.id;
  return std::nullopt;
}

RelationId RelationCatalog::id_of(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw CatalogError("unknown relation '" + std::string(name) + "'");
}

const RelationEntry& RelationCatalog::at(RelationId id) const {
  if (!contains(id))
    throw CatalogError("relation id " + std::to_string(id.value) + " outside catalog of size " +
                       std::to_string(entries_.size()));
  return entries_[id.index()];
}

std::uint64_t RelationCatalog::fingerprint() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::string_view bytes) {
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;  // field separator
    h *= 1099511628211ull;
  };
  for (const auto& e : entries_) {
    mix(std::to_string(e.id.value));
    mix(e.name);
    mix(e.query);
  }
  return h;
}

// --- Dataset -------------------------------------------------------------

double Dataset::mean_length() const {
  if (instances.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& inst : instances) total += inst.length();
  return static_cast<double>(total) / static_cast<double>(instances.size());
}

std::size_t Dataset::triple_count() const {
  std::size_t n = 0;
  for (const auto& inst : instances) n += inst.triples.size();
  return n;
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const std::string where = "instance " + std::to_string(i);
    if (inst.tokens.empty()) throw ParseError(where + ": empty token list");
    for (const auto& tok : inst.tokens)
      if (tok.empty()) throw ParseError(where + ": empty token");
    std::set<Triple> seen;
    for (const auto& t : inst.triples) {
      if (!t.subject.valid_for(inst.length())) throw ParseError(where + ": subject span out of bounds");
      if (!t.object.valid_for(inst.length())) throw ParseError(where + ": object span out of bounds");
      if (!catalog.contains(t.relation))
        throw CatalogError(where + ": relation id " + std::to_string(t.relation.value) + " not in catalog");
      if (!seen.insert(t).second) throw ParseError(where + ": duplicate triple");
    }
  }
}

PredictionSet as_predictions(const Dataset& dataset) {
  PredictionSet out;
  out.catalog = dataset.catalog;
  out.instances.reserve(dataset.size());
  for (const auto& inst : dataset.instances) {
    ScoredInstance si;
    si.tokens = inst.tokens;
    for (const auto& t : inst.triples) si.triples.push_back({t, 1.0});
    out.instances.push_back(std::move(si));
  }
  return out;
}

// --- tokenization --------------------------------------------------------

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
// Bytes >= 0x80 belong to UTF-8 sequences and are treated as word characters.
bool is_word(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }
bool is_joiner(unsigned char c) { return c == '-' || c == '\'' || c == '.' || c == ','; }

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  auto at = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  while (i < n) {
    if (is_space(at(i))) {
      ++i;
      continue;
    }
    if (is_punct(at(i))) {
      out.push_back({std::string(text.substr(i, 1)), out.size(), i});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !is_space(at(j))) {
      if (is_punct(at(j))) {
        const bool inner = is_joiner(at(j)) && j > i && j + 1 < n && is_word(at(j - 1)) && is_word(at(j + 1));
        if (!inner) break;
      }
      ++j;
    }
    out.push_back({std::string(text.substr(i, j - i)), out.size(), i});
    i = j;
  }
  if (out.empty()) throw EmptyInput("cannot tokenize empty or whitespace-only text");
  return out;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  auto tokens = tokenize(text);
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (auto& t : tokens) out.push_back(std::move(t.text));
  return out;
}

std::optional<Span> find_first(std::span<const std::string> haystack, std::span<const std::string> needle) {
  if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end());
  if (it == haystack.end()) return std::nullopt;
  const auto start = static_cast<std::size_t>(it - haystack.begin());
  return Span{start, start + needle.size() - 1};
}

// --- NYT import ----------------------------------------------------------

std::string surface_text(std::string_view label) {
  auto slash = label.find_last_of('/');
  std::string tail(slash == std::string_view::npos ? label : label.substr(slash + 1));
  if (tail.empty()) tail = std::string(label);
  std::replace(tail.begin(), tail.end(), '_', ' ');
  return tail;
}

namespace {

bool is_na_label(std::string_view label) { return label.empty() || label == "None" || label == "NA"; }

std::string required_string(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) throw ParseError(std::string("missing or non-string field '") + field + "'", line);
  return it->get<std::string>();
}

}  // namespace

Dataset import_nyt_jsonl(std::istream& in, ImportStats* stats) {
  Dataset ds;
  ImportStats local;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++local.lines;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!doc.is_object()) throw ParseError("expected a JSON object", lineno);
    LabeledInstance inst;
    try {
      inst.tokens = tokenize_words(required_string(doc, "sentText", lineno));
    } catch (const EmptyInput&) {
      throw ParseError("empty 'sentText'", lineno);
    }
    auto mentions = doc.find("relationMentions");
    if (mentions != doc.end() && !mentions->is_array()) throw ParseError("'relationMentions' must be an array", lineno);
    if (mentions != doc.end()) {
      for (const auto& m : *mentions) {
        if (!m.is_object()) throw ParseError("relation mention must be an object", lineno);
        ++local.mentions;
        const std::string label = required_string(m, "label", lineno);
        if (is_na_label(label)) {
          ++local.na_mentions;
          continue;
        }
        const std::string em1 = required_string(m, "em1Text", lineno);
        const std::string em2 = required_string(m, "em2Text", lineno);
        std::optional<Span> subject, object;
        try {
          subject = find_first(inst.tokens, tokenize_words(em1));
          object = find_first(inst.tokens, tokenize_words(em2));
        } catch (const EmptyInput&) {
        }
        if (!subject || !object) {
          ++local.unresolved_mentions;
          continue;
        }
        const RelationId rel = ds.catalog.intern(label, surface_text(label));
        inst.add_triple({*subject, rel, *object});
      }
    }
    ds.instances.push_back(std::move(inst));
  }
  if (local.unresolved_mentions > 0)
    log::warn("dropped " + std::to_string(local.unresolved_mentions) + " relation mention(s) whose entity text was not found");
  if (stats) *stats = local;
  return ds;
}

Dataset import_nyt_jsonl(const std::filesystem::path& path, ImportStats* stats) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return import_nyt_jsonl(in, stats);
}

// --- catalog -------------------------------------------------------------

void write_catalog(const RelationCatalog& catalog, std::ostream& out) {
  json arr = json::array();
  for (const auto& e : catalog.entries()) arr.push_back({{"id", e.id.value}, {"name", e.name}, {"query", e.query}});
  out << arr.dump(2) << '\n';
}

RelationCatalog read_catalog(std::istream& in) {
  json arr;
  try {
    arr = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("catalog: malformed JSON: ") + e.what());
  }
  if (!arr.is_array()) throw ParseError("catalog: expected a JSON array");
  RelationCatalog catalog;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& e = arr[i];
    const std::string where = "catalog entry " + std::to_string(i);
    if (!e.is_object()) throw ParseError(where + ": expected object");
    if (e.contains("id") && !e["id"].is_number_unsigned()) throw ParseError(where + ": field 'id' must be a non-negative integer");
    if (!e.contains("name") || !e["name"].is_string()) throw ParseError(where + ": field 'name' must be a string");
    if (!e.contains("query") || !e["query"].is_string()) throw ParseError(where + ": field 'query' must be a string");
    if (e.contains("id") && e["id"].get<std::uint64_t>() != i) throw ParseError(where + ": field 'id' must be dense (expected " + std::to_string(i) + ")");
    try {
      catalog.add(e["name"].get<std::string>(), e["query"].get<std::string>());
    } catch (const CatalogError& err) {
      throw ParseError(where + ": " + err.what());
    }
  }
  return catalog;
}

void save_catalog(const RelationCatalog& catalog, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  write_catalog(catalog, out);
}

RelationCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_catalog(in);
}

// --- canonical JSONL -----------------------------------------------------

namespace {

json span_json(const Span& s) { return json::array({s.start, s.end}); }

Span parse_span(const json& j, const char* field, std::size_t n_tokens, std::size_t line) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned())
    throw ParseError(std::string("field '") + field + "' must be [start, end] with non-negative integers", line);
  Span s{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
  if (s.end < s.start) throw ParseError(std::string("field '") + field + "': span end < start", line);
  if (s.end >= n_tokens) throw ParseError(std::string("field '") + field + "': span exceeds sentence length", line);
  return s;
}

json triple_json(const Triple& t, const RelationCatalog& catalog) {
  json j;
  j["subject"] = span_json(t.subject);
  j["relation"] = catalog.at(t.relation).name;
  j["object"] = span_json(t.object);
  return j;
}

struct ParsedLine {
  std::vector<std::string> tokens;
  std::vector<std::pair<Triple, double>> triples;
};

// Parses one canonical line. `resolve` maps a relation name to an id.
template <typename Resolve>
ParsedLine parse_canonical_line(const std::string& line, std::size_t lineno, Resolve&& resolve, bool with_score) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
  }
  if (!doc.is_object()) throw ParseError("expected a JSON object", lineno);
  ParsedLine out;
  auto toks = doc.find("tokens");
  if (toks == doc.end() || !toks->is_array() || toks->empty())
    throw ParseError("field 'tokens' must be a non-empty array", lineno);
  for (const auto& t : *toks) {
    if (!t.is_string() || t.get_ref<const std::string&>().empty())
      throw ParseError("field 'tokens' must contain non-empty strings", lineno);
    out.tokens.push_back(t.get<std::string>());
  }
  auto triples = doc.find("triples");
  if (triples == doc.end() || !triples->is_array()) throw ParseError("field 'triples' must be an array", lineno);
  for (const auto& t : *triples) {
    if (!t.is_object()) throw ParseError("field 'triples' must contain objects", lineno);
    if (!t.contains("subject")) throw ParseError("missing field 'subject'", lineno);
    if (!t.contains("object")) throw ParseError("missing field 'object'", lineno);
    if (!t.contains("relation") || !t["relation"].is_string())
      throw ParseError("field 'relation' must be a string", lineno);
    Triple tr;
    tr.subject = parse_span(t["subject"], "subject", out.tokens.size(), lineno);
    tr.object = parse_span(t["object"], "object", out.tokens.size(), lineno);
    tr.relation = resolve(t["relation"].get<std::string>(), lineno);
    double score = 1.0;
    if (with_score) {
      if (t.contains("score")) {
        if (!t["score"].is_number()) throw ParseError("field 'score' must be a number", lineno);
        score = t["score"].get<double>();
        if (!(score >= 0.0 && score <= 1.0)) throw ParseError("field 'score' must lie in [0,1]", lineno);
      }
    }
    out.triples.emplace_back(tr, score);
  }
  return out;
}

template <typename Resolve>
Dataset read_canonical_impl(std::istream& in, RelationCatalog catalog, Resolve&& resolve) {
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto parsed = parse_canonical_line(line, lineno, [&](const std::string& name, std::size_t ln) { return resolve(catalog, name, ln); }, false);
    LabeledInstance inst;
    inst.tokens = std::move(parsed.tokens);
    for (const auto& [t, score] : parsed.triples)
      if (!inst.add_triple(t)) throw ParseError("duplicate triple", lineno);
    ds.instances.push_back(std::move(inst));
  }
  ds.catalog = std::move(catalog);
  return ds;
}

}  // namespace

void write_canonical(const Dataset& dataset, std::ostream& out) {
  for (const auto& inst : dataset.instances) {
    json doc;
    doc["tokens"] = inst.tokens;
    doc["triples"] = json::array();
    for (const auto& t : inst.triples) doc["triples"].push_back(triple_json(t, dataset.catalog));
    out << doc.dump() << '\n';
  }
}

Dataset read_canonical(std::istream& in, const RelationCatalog& catalog) {
  return read_canonical_impl(in, catalog, [](const RelationCatalog& c, const std::string& name, std::size_t ln) {
    auto id = c.find(name);
    if (!id) throw CatalogError("line " + std::to_string(ln) + ": unknown relation '" + name + "'");
    return *id;
  });
}

Dataset read_canonical(std::istream& in) {
  return read_canonical_impl(in, RelationCatalog{}, [](RelationCatalog& c, const std::string& name, std::size_t) {
    return c.intern(name, name);
  });
}

void export_canonical(const Dataset& dataset, const std::filesystem::path& data_path,
                      const std::filesystem::path& catalog_path) {
  std::ofstream out(data_path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + data_path.string());
  write_canonical(dataset, out);
  save_catalog(dataset.catalog, catalog_path);
}

Dataset import_canonical(const std::filesystem::path& data_path, const std::optional<std::filesystem::path>& catalog_path) {
  std::ifstream in(data_path);
  if (!in) throw ParseError("cannot open " + data_path.string());
  if (catalog_path) return read_canonical(in, load_catalog(*catalog_path));
  return read_canonical(in);
}

void write_predictions(const PredictionSet& predictions, std::ostream& out) {
  for (const auto& inst : predictions.instances) {
    json doc;
    doc["tokens"] = inst.tokens;
    doc["triples"] = json::array();
    for (const auto& st : inst.triples) {
      json t = triple_json(st.triple, predictions.catalog);
      t["score"] = st.score;
      doc["triples"].push_back(std::move(t));
    }
    out << doc.dump() << '\n';
  }
}

PredictionSet read_predictions(std::istream& in, const RelationCatalog& catalog) {
  PredictionSet out;
  out.catalog = catalog;
  std::string line;
  std::size_t lineno = 0;
  auto resolve = [&](const std::string& name, std::size_t ln) {
    auto id = catalog.find(name);
    if (!id) throw CatalogError("line " + std::to_string(ln) + ": unknown relation '" + name + "'");
    return *id;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto parsed = parse_canonical_line(line, lineno, resolve, true);
    ScoredInstance si;
    si.tokens = std::move(parsed.tokens);
    for (const auto& [t, score] : parsed.triples) si.triples.push_back({t, score});
    out.instances.push_back(std::move(si));
  }
  return out;
}

void export_predictions(const PredictionSet& predictions, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  write_predictions(predictions, out);
}

PredictionSet import_predictions(const std::filesystem::path& path, const RelationCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_predictions(in, catalog);
}

}  // namespace rere
