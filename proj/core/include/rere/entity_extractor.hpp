#ifndef RERE_ENTITY_EXTRACTOR_HPP
#define RERE_ENTITY_EXTRACTOR_HPP

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rere/datamodel.hpp"
#include "rere/encoder.hpp"
#include "rere/labels.hpp"

namespace rere {

// N x 4 boundary probabilities (s_start, s_end, o_start, o_end) for one
// (sentence, relation) query.
struct PointerGrid {
  nn::Matrix grid;
  double threshold = 0.5;

  std::size_t length() const noexcept { return static_cast<std::size_t>(grid.rows()); }
};

struct ExtractedPair {
  Span subject;
  Span object;
  std::array<double, 4> boundary{};  // probabilities at the four boundary cells
  double score = 0.0;                // product of `boundary`

  friend bool operator==(const ExtractedPair&, const ExtractedPair&) = default;
};

// Turns a pointer grid into (subject, object) pairs:
//  1. cells >= threshold are marks;
//  2. each start mark takes the nearest end mark at or after it and before
//     the next start mark of the same kind; unmatched marks are dropped;
//  3. scanning subjects by start, a subject owns every object starting in
//     [its start, next subject's start); if it owns none it takes the nearest
//     object starting at or after it. Objects starting before the first
//     subject belong to the first subject.
std::vector<ExtractedPair> decode_spans(const nn::Matrix& grid, double threshold);
inline std::vector<ExtractedPair> decode_spans(const PointerGrid& g) { return decode_spans(g.grid, g.threshold); }

struct Extraction {
  Triple triple;
  ExtractedPair pair;
};

// Stage 2: four sigmoid pointer heads over the sentence rows of
// [BOS] query [SEP] c [EOS], where the query is the relation's surface text.
class EntityExtractor {
 public:
  EntityExtractor() = default;
  EntityExtractor(RelationCatalog catalog, std::unique_ptr<TokenEncoder> encoder, std::uint64_t seed);

  EntityExtractor(EntityExtractor&&) noexcept = default;
  EntityExtractor& operator=(EntityExtractor&&) noexcept = default;

  bool initialized() const noexcept { return encoder_ != nullptr; }
  const RelationCatalog& catalog() const noexcept { return catalog_; }
  const std::vector<std::string>& query_tokens(RelationId relation) const;

  // Rows beyond a truncated sentence are reported as probability 0.
  PointerGrid score_pointers(RelationId relation, std::span<const std::string> sentence, double threshold = 0.5) const;
  // One query per relation; decoded pairs tagged with that relation.
  std::vector<Extraction> extract(std::span<const RelationId> relations, std::span<const std::string> sentence,
                                  double threshold = 0.5) const;

  // Number of score_pointers() calls since construction / last reset.
  std::uint64_t invocation_count() const noexcept { return calls_.value.load(); }
  void reset_invocation_count() noexcept { calls_.value = 0; }

  struct Pass {
    nn::Matrix grid;  // kept context rows x 4
    nn::Matrix context_states;
    std::vector<std::size_t> alignment;
    std::size_t sequence_length = 0;
    std::unique_ptr<EncodeTrace> trace;
  };
  Pass forward_train(RelationId relation, std::span<const std::string> sentence, nn::Rng& rng);
  void backward(const Pass& pass, const nn::Matrix& d_grid);

  nn::ParameterRefs parameters();
  TokenEncoder& encoder();
  const TokenEncoder& encoder() const;
  nn::Parameter& weights() noexcept { return weights_; }
  nn::Parameter& bias() noexcept { return bias_; }

 private:
  struct Counter {
    std::atomic<std::uint64_t> value{0};
    Counter() = default;
    Counter(Counter&& o) noexcept : value(o.value.load()) {}
    Counter& operator=(Counter&& o) noexcept {
      value = o.value.load();
      return *this;
    }
  };

  void require_initialized() const;
  ControlSequence assemble(RelationId relation, std::span<const std::string> sentence) const;

  RelationCatalog catalog_;
  std::vector<std::vector<std::string>> queries_;
  std::unique_ptr<TokenEncoder> encoder_;
  nn::Parameter weights_;  // d x 4
  nn::Parameter bias_;     // 1 x 4
  mutable Counter calls_;
};

}  // namespace rere

#endif  // RERE_ENTITY_EXTRACTOR_HPP
