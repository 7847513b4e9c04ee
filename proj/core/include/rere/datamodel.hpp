#ifndef RERE_DATAMODEL_HPP
#define RERE_DATAMODEL_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rere {

// Index into a RelationCatalog. Kept distinct from plain integers so token
// positions and relation ids cannot be swapped by accident.
struct RelationId {
  std::uint32_t value = 0;

  constexpr RelationId() = default;
  constexpr explicit RelationId(std::uint32_t v) : value(v) {}
  constexpr explicit RelationId(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}
  constexpr explicit RelationId(int v) : value(static_cast<std::uint32_t>(v)) {}

  constexpr std::size_t index() const noexcept { return value; }
  friend constexpr auto operator<=>(RelationId, RelationId) = default;
};

// Inclusive token span [start, end].
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  constexpr std::size_t length() const noexcept { return end - start + 1; }
  constexpr bool valid_for(std::size_t sentence_length) const noexcept {
    return start <= end && end < sentence_length;
  }
  friend constexpr auto operator<=>(const Span&, const Span&) = default;
};

struct Triple {
  Span subject;
  RelationId relation;
  Span object;

  friend constexpr auto operator<=>(const Triple&, const Triple&) = default;
};

// Output of tokenize(): the token text plus where it came from.
struct Token {
  std::string text;
  std::size_t index = 0;   // position within the sentence
  std::size_t offset = 0;  // byte offset of the first character in the source text

  friend bool operator==(const Token&, const Token&) = default;
};

struct LabeledInstance {
  std::vector<std::string> tokens;
  std::vector<Triple> triples;  // empty = NA sentence

  std::size_t length() const noexcept { return tokens.size(); }
  bool is_na() const noexcept { return triples.empty(); }

  // T_i|r: the triples sharing relation r, in stored order.
  std::vector<Triple> triples_for(RelationId relation) const;
  // Distinct relations of the instance, ascending.
  std::vector<RelationId> relations() const;
  // Adds the triple unless an identical one is already present. Returns true when inserted.
  bool add_triple(const Triple& triple);

  friend bool operator==(const LabeledInstance&, const LabeledInstance&) = default;
};

struct RelationEntry {
  RelationId id;
  std::string name;
  std::string query;  // surface text used as the extractor query

  friend bool operator==(const RelationEntry&, const RelationEntry&) = default;
};

class RelationCatalog {
 public:
  RelationCatalog() = default;

  // Appends a relation with the next dense id. Throws CatalogError on a
  // duplicate name, an empty name, or an empty query.
  RelationId add(std::string name, std::string query);
  // Returns the existing id for `name`, or appends it.
  RelationId intern(const std::string& name, const std::string& query);

  std::optional<RelationId> find(std::string_view name) const;
  // Throws CatalogError for unknown names / out-of-range ids.
  RelationId id_of(std::string_view name) const;
  const RelationEntry& at(RelationId id) const;
  bool contains(RelationId id) const noexcept { return id.index() < entries_.size(); }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<RelationEntry>& entries() const noexcept { return entries_; }

  // Stable FNV-1a digest over (id, name, query) of every entry.
  std::uint64_t fingerprint() const;

  friend bool operator==(const RelationCatalog&, const RelationCatalog&) = default;

 private:
  std::vector<RelationEntry> entries_;
};

struct Dataset {
  RelationCatalog catalog;
  std::vector<LabeledInstance> instances;

  std::size_t size() const noexcept { return instances.size(); }
  bool empty() const noexcept { return instances.empty(); }
  // Mean sentence length; 0 for an empty dataset.
  double mean_length() const;
  std::size_t triple_count() const;
  // Checks every instance invariant against the catalog. Throws ParseError
  // for malformed spans/duplicates and CatalogError for unknown relations.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct ScoredTriple {
  Triple triple;
  double score = 1.0;

  friend bool operator==(const ScoredTriple&, const ScoredTriple&) = default;
};

struct ScoredInstance {
  std::vector<std::string> tokens;
  std::vector<ScoredTriple> triples;

  friend bool operator==(const ScoredInstance&, const ScoredInstance&) = default;
};

// Per-sentence scored triples, aligned by index with the dataset they were
// produced from.
struct PredictionSet {
  RelationCatalog catalog;
  std::vector<ScoredInstance> instances;

  std::size_t size() const noexcept { return instances.size(); }

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

// Gold triples rendered as predictions with score 1.
PredictionSet as_predictions(const Dataset& dataset);

// --- tokenization --------------------------------------------------------

// Splits on whitespace, then splits every ASCII punctuation character into
// its own token. '-', '\'', '.' and ',' between two alphanumeric characters
// stay inside the word ("Newcastle-upon-Tyne", "O'Neil", "3.5"). Throws
// EmptyInput for empty or whitespace-only text.
std::vector<Token> tokenize(std::string_view text);
std::vector<std::string> tokenize_words(std::string_view text);

// First occurrence of `needle` as a contiguous token subsequence.
std::optional<Span> find_first(std::span<const std::string> haystack,
                               std::span<const std::string> needle);

// --- serialization -------------------------------------------------------

struct ImportStats {
  std::size_t lines = 0;
  std::size_t mentions = 0;
  std::size_t unresolved_mentions = 0;  // dropped: entity text not found in sentence
  std::size_t na_mentions = 0;
};

// NYT-style JSON lines: {"sentText": ..., "relationMentions": [{"em1Text",
// "em2Text", "label"}]}. Entity texts resolve to their first token-level
// occurrence; labels "None"/"NA" mark NA sentences. The catalog is built from
// the labels in order of first appearance.
Dataset import_nyt_jsonl(std::istream& in, ImportStats* stats = nullptr);
Dataset import_nyt_jsonl(const std::filesystem::path& path, ImportStats* stats = nullptr);

// Surface query for a relation label: last '/'-separated component with
// underscores replaced by spaces ("/people/person/place_of_birth" ->
// "place of birth").
std::string surface_text(std::string_view label);

void write_catalog(const RelationCatalog& catalog, std::ostream& out);
RelationCatalog read_catalog(std::istream& in);
void save_catalog(const RelationCatalog& catalog, const std::filesystem::path& path);
RelationCatalog load_catalog(const std::filesystem::path& path);

// Canonical JSONL: {"tokens": [...], "triples": [{"subject": [s,e],
// "relation": "<name>", "object": [s,e]}]}. Reading against a catalog
// rejects unknown relation names; reading without one builds a catalog in
// order of first appearance (query = name).
void write_canonical(const Dataset& dataset, std::ostream& out);
Dataset read_canonical(std::istream& in, const RelationCatalog& catalog);
Dataset read_canonical(std::istream& in);

void export_canonical(const Dataset& dataset, const std::filesystem::path& data_path,
                      const std::filesystem::path& catalog_path);
Dataset import_canonical(const std::filesystem::path& data_path,
                         const std::optional<std::filesystem::path>& catalog_path = std::nullopt);

// Predictions share the canonical layout plus a per-triple "score" field.
void write_predictions(const PredictionSet& predictions, std::ostream& out);
PredictionSet read_predictions(std::istream& in, const RelationCatalog& catalog);
void export_predictions(const PredictionSet& predictions, const std::filesystem::path& path);
PredictionSet import_predictions(const std::filesystem::path& path, const RelationCatalog& catalog);

}  // namespace rere

#endif  // RERE_DATAMODEL_HPP
