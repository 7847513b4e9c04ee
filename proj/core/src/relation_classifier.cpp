#include "rere/relation_classifier.hpp"

#include <cmath>

#include "rere/errors.hpp"

namespace rere {

std::vector<RelationId> decide(std::span<const double> scores, double threshold) {
  std::vector<RelationId> out;
  for (std::size_t j = 0; j < scores.size(); ++j)
    if (scores[j] >= threshold) out.emplace_back(j);
  return out;
}

RelationClassifier::RelationClassifier(RelationCatalog catalog, std::unique_ptr<TokenEncoder> encoder, std::uint64_t seed)
    : catalog_(std::move(catalog)), encoder_(std::move(encoder)) {
  if (!encoder_) throw ModelStateError("relation classifier needs an encoder");
  if (catalog_.empty()) throw CatalogError("relation classifier needs a non-empty catalog");
  const auto r = static_cast<Eigen::Index>(catalog_.size());
  const Eigen::Index d = encoder_->dim();
  weights_ = nn::Parameter("rc.weights", r, d);
  bias_ = nn::Parameter("rc.bias", r, 1);
  nn::Rng rng(seed ^ 0x5243u);
  nn::init_uniform(weights_.value, 1.0 / std::sqrt(static_cast<double>(d)), rng);
}

void RelationClassifier::require_initialized() const {
  if (!initialized()) throw ModelStateError("relation classifier is not initialized");
}

RelationScores RelationClassifier::score_relations(std::span<const std::string> sentence, double threshold) const {
  require_initialized();
  const auto seq = assemble_rc_input(sentence, encoder_->max_length());
  const auto enc = encoder_->encode(seq);
  const nn::Vector logits = weights_.value * enc.sentence_vector() + bias_.value.col(0);
  RelationScores out;
  out.threshold = threshold;
  out.scores.resize(static_cast<std::size_t>(logits.size()));
  for (Eigen::Index j = 0; j < logits.size(); ++j) out.scores[static_cast<std::size_t>(j)] = nn::sigmoid(logits(j));
  return out;
}

RelationClassifier::Pass RelationClassifier::forward_train(std::span<const std::string> sentence, nn::Rng& rng) {
  require_initialized();
  const auto seq = assemble_rc_input(sentence, encoder_->max_length());
  EncodedSequence enc;
  Pass pass;
  pass.trace = encoder_->encode_for_training(seq, rng, enc);
  pass.sentence_vector = enc.sentence_vector();
  pass.sequence_length = seq.size();
  pass.scores = nn::sigmoid(weights_.value * pass.sentence_vector + bias_.value.col(0));
  return pass;
}

void RelationClassifier::backward(const Pass& pass, const nn::Vector& d_scores) {
  const nn::Vector d_logits = d_scores.array() * pass.scores.array() * (1.0 - pass.scores.array());
  weights_.grad.noalias() += d_logits * pass.sentence_vector.transpose();
  bias_.grad.col(0) += d_logits;
  nn::Matrix d_states = nn::Matrix::Zero(static_cast<Eigen::Index>(pass.sequence_length), encoder_->dim());
  d_states.row(0) = (weights_.value.transpose() * d_logits).transpose();
  encoder_->backward(*pass.trace, d_states);
}

nn::ParameterRefs RelationClassifier::parameters() {
  require_initialized();
  auto out = encoder_->parameters();
  out.push_back(&weights_);
  out.push_back(&bias_);
  return out;
}

TokenEncoder& RelationClassifier::encoder() {
  require_initialized();
  return *encoder_;
}

const TokenEncoder& RelationClassifier::encoder() const {
  require_initialized();
  return *encoder_;
}

}  // namespace rere
