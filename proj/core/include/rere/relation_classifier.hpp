#ifndef RERE_RELATION_CLASSIFIER_HPP
#define RERE_RELATION_CLASSIFIER_HPP

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rere/datamodel.hpp"
#include "rere/encoder.hpp"
#include "rere/labels.hpp"

namespace rere {

// Independent per-relation probabilities for one sentence.
struct RelationScores {
  std::vector<double> scores;
  double threshold = 0.5;
};

// Relations whose score reaches the threshold, ascending. Empty = NA.
std::vector<RelationId> decide(std::span<const double> scores, double threshold);
inline std::vector<RelationId> decide(const RelationScores& s) { return decide(s.scores, s.threshold); }

// Stage 1: sigmoid(W h0 + b) over the sentence vector of [BOS] c [EOS].
class RelationClassifier {
 public:
  // Uninitialized; scoring throws ModelStateError.
  RelationClassifier() = default;
  RelationClassifier(RelationCatalog catalog, std::unique_ptr<TokenEncoder> encoder, std::uint64_t seed);

  RelationClassifier(RelationClassifier&&) noexcept = default;
  RelationClassifier& operator=(RelationClassifier&&) noexcept = default;

  bool initialized() const noexcept { return encoder_ != nullptr; }
  const RelationCatalog& catalog() const noexcept { return catalog_; }

  RelationScores score_relations(std::span<const std::string> sentence, double threshold = 0.5) const;

  // Training-mode forward pass; keeps what backward() needs.
  struct Pass {
    nn::Vector scores;
    nn::Vector sentence_vector;
    std::size_t sequence_length = 0;
    std::unique_ptr<EncodeTrace> trace;
  };
  Pass forward_train(std::span<const std::string> sentence, nn::Rng& rng);
  // Accumulates gradients from d loss / d scores.
  void backward(const Pass& pass, const nn::Vector& d_scores);

  nn::ParameterRefs parameters();
  TokenEncoder& encoder();
  const TokenEncoder& encoder() const;
  nn::Parameter& weights() noexcept { return weights_; }
  nn::Parameter& bias() noexcept { return bias_; }

 private:
  void require_initialized() const;

  RelationCatalog catalog_;
  std::unique_ptr<TokenEncoder> encoder_;
  nn::Parameter weights_;  // |R| x d
  nn::Parameter bias_;     // |R| x 1
};

}  // namespace rere

#endif  // RERE_RELATION_CLASSIFIER_HPP
