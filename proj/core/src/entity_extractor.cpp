#include "rere/entity_extractor.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "rere/errors.hpp"

namespace rere {

namespace {

// Start/end marks of one entity kind -> spans, ordered by start.
std::vector<Span> pair_boundaries(const nn::Matrix& grid, int start_col, int end_col, double threshold) {
  const auto n = static_cast<std::size_t>(grid.rows());
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < n; ++i)
    if (grid(static_cast<Eigen::Index>(i), start_col) >= threshold) starts.push_back(i);
  std::vector<Span> spans;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::size_t limit = k + 1 < starts.size() ? starts[k + 1] : n;
    for (std::size_t q = starts[k]; q < limit; ++q) {
      if (grid(static_cast<Eigen::Index>(q), end_col) >= threshold) {
        spans.push_back({starts[k], q});
        break;
      }
    }
  }
  return spans;
}

}  // namespace

std::vector<ExtractedPair> decode_spans(const nn::Matrix& grid, double threshold) {
  if (grid.cols() != 4) throw ShapeError("pointer grid must have 4 columns");
  const auto subjects = pair_boundaries(grid, kSubjectStart, kSubjectEnd, threshold);
  const auto objects = pair_boundaries(grid, kObjectStart, kObjectEnd, threshold);
  std::vector<ExtractedPair> out;
  if (subjects.empty() || objects.empty()) return out;

  auto emit = [&](const Span& s, const Span& o) {
    ExtractedPair p;
    p.subject = s;
    p.object = o;
    p.boundary = {grid(static_cast<Eigen::Index>(s.start), kSubjectStart),
                  grid(static_cast<Eigen::Index>(s.end), kSubjectEnd),
                  grid(static_cast<Eigen::Index>(o.start), kObjectStart),
                  grid(static_cast<Eigen::Index>(o.end), kObjectEnd)};
    p.score = p.boundary[0] * p.boundary[1] * p.boundary[2] * p.boundary[3];
    out.push_back(p);
  };

  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const Span& s = subjects[i];
    const std::size_t next = i + 1 < subjects.size() ? subjects[i + 1].start : static_cast<std::size_t>(grid.rows());
    if (i == 0)
      for (const auto& o : objects)
        if (o.start < s.start) emit(s, o);
    bool owns_any = false;
    for (const auto& o : objects) {
      if (o.start >= s.start && o.start < next) {
        emit(s, o);
        owns_any = true;
      }
    }
    if (!owns_any) {
      auto it = std::find_if(objects.begin(), objects.end(), [&](const Span& o) { return o.start >= s.start; });
      if (it != objects.end()) emit(s, *it);
    }
  }
  return out;
}

EntityExtractor::EntityExtractor(RelationCatalog catalog, std::unique_ptr<TokenEncoder> encoder, std::uint64_t seed)
    : catalog_(std::move(catalog)), encoder_(std::move(encoder)) {
  if (!encoder_) throw ModelStateError("entity extractor needs an encoder");
  if (catalog_.empty()) throw CatalogError("entity extractor needs a non-empty catalog");
  for (const auto& e : catalog_.entries()) queries_.push_back(tokenize_words(e.query));
  const Eigen::Index d = encoder_->dim();
  weights_ = nn::Parameter("ee.weights", d, 4);
  bias_ = nn::Parameter("ee.bias", 1, 4);
  nn::Rng rng(seed ^ 0x4545u);
  nn::init_uniform(weights_.value, 1.0 / std::sqrt(static_cast<double>(d)), rng);
}

void EntityExtractor::require_initialized() const {
  if (!initialized()) throw ModelStateError("entity extractor is not initialized");
}

const std::vector<std::string>& EntityExtractor::query_tokens(RelationId relation) const {
  catalog_.at(relation);  // CatalogError for unknown ids
  return queries_[relation.index()];
}

ControlSequence EntityExtractor::assemble(RelationId relation, std::span<const std::string> sentence) const {
  return assemble_ee_input(query_tokens(relation), sentence, encoder_->max_length());
}

PointerGrid EntityExtractor::score_pointers(RelationId relation, std::span<const std::string> sentence,
                                            double threshold) const {
  require_initialized();
  ++calls_.value;
  const auto seq = assemble(relation, sentence);
  const auto enc = encoder_->encode(seq);
  PointerGrid out;
  out.threshold = threshold;
  out.grid = nn::Matrix::Zero(static_cast<Eigen::Index>(sentence.size()), 4);
  for (std::size_t i = 0; i < enc.alignment.size(); ++i) {
    const auto row = enc.states.row(static_cast<Eigen::Index>(enc.alignment[i]));
    const Eigen::RowVector4d logits = row * weights_.value + bias_.value;
    for (int k = 0; k < 4; ++k) out.grid(static_cast<Eigen::Index>(i), k) = nn::sigmoid(logits(k));
  }
  return out;
}

std::vector<Extraction> EntityExtractor::extract(std::span<const RelationId> relations,
                                                 std::span<const std::string> sentence, double threshold) const {
  std::vector<Extraction> out;
  for (RelationId rel : relations) {
    const auto grid = score_pointers(rel, sentence, threshold);
    for (const auto& pair : decode_spans(grid)) out.push_back({{pair.subject, rel, pair.object}, pair});
  }
  return out;
}

EntityExtractor::Pass EntityExtractor::forward_train(RelationId relation, std::span<const std::string> sentence,
                                                     nn::Rng& rng) {
  require_initialized();
  const auto seq = assemble(relation, sentence);
  EncodedSequence enc;
  Pass pass;
  pass.trace = encoder_->encode_for_training(seq, rng, enc);
  pass.alignment = enc.alignment;
  pass.sequence_length = seq.size();
  pass.context_states.resize(static_cast<Eigen::Index>(enc.alignment.size()), enc.dim());
  for (std::size_t i = 0; i < enc.alignment.size(); ++i)
    pass.context_states.row(static_cast<Eigen::Index>(i)) = enc.states.row(static_cast<Eigen::Index>(enc.alignment[i]));
  nn::Matrix logits = pass.context_states * weights_.value;
  logits.rowwise() += bias_.value.row(0);
  pass.grid = nn::sigmoid(logits);
  return pass;
}

void EntityExtractor::backward(const Pass& pass, const nn::Matrix& d_grid) {
  const nn::Matrix d_logits = d_grid.array() * pass.grid.array() * (1.0 - pass.grid.array());
  weights_.grad.noalias() += pass.context_states.transpose() * d_logits;
  bias_.grad.row(0) += d_logits.colwise().sum();
  const nn::Matrix d_context = d_logits * weights_.value.transpose();
  nn::Matrix d_states = nn::Matrix::Zero(static_cast<Eigen::Index>(pass.sequence_length), encoder_->dim());
  for (std::size_t i = 0; i < pass.alignment.size(); ++i)
    d_states.row(static_cast<Eigen::Index>(pass.alignment[i])) = d_context.row(static_cast<Eigen::Index>(i));
  encoder_->backward(*pass.trace, d_states);
}

nn::ParameterRefs EntityExtractor::parameters() {
  require_initialized();
  auto out = encoder_->parameters();
  out.push_back(&weights_);
  out.push_back(&bias_);
  return out;
}

TokenEncoder& EntityExtractor::encoder() {
  require_initialized();
  return *encoder_;
}

const TokenEncoder& EntityExtractor::encoder() const {
  require_initialized();
  return *encoder_;
}

}  // namespace rere
