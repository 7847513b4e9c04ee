#include "rere/encoder.hpp"

#include <cmath>
#include <map>

#include "rere/errors.hpp"
#include "rere/log.hpp"

namespace rere {

// --- assembly ------------------------------------------------------------

namespace {

SequenceItem control(ControlToken c) { return {c, {}}; }

void append_context(ControlSequence& seq, std::span<const std::string> sentence, std::size_t budget) {
  seq.context_length = sentence.size();
  const std::size_t kept = std::min(sentence.size(), budget);
  if (kept < sentence.size()) {
    seq.truncated = true;
    log::warn("sequence exceeds max length; truncated sentence from " + std::to_string(sentence.size()) + " to " +
              std::to_string(kept) + " tokens");
  }
  for (std::size_t i = 0; i < kept; ++i) {
    seq.alignment.push_back(seq.items.size());
    seq.items.push_back({ControlToken::kNone, sentence[i]});
  }
}

}  // namespace

ControlSequence assemble_rc_input(std::span<const std::string> sentence, std::size_t max_length) {
  if (sentence.empty()) throw EmptyInput("cannot assemble an empty sentence");
  if (max_length < 3) throw ConfigError("max length must leave room for at least one token");
  ControlSequence seq;
  seq.items.push_back(control(ControlToken::kBos));
  append_context(seq, sentence, max_length - 2);
  seq.items.push_back(control(ControlToken::kEos));
  return seq;
}

ControlSequence assemble_ee_input(std::span<const std::string> query, std::span<const std::string> sentence,
                                  std::size_t max_length) {
  if (query.empty()) throw EmptyInput("cannot assemble an empty query");
  if (sentence.empty()) throw EmptyInput("cannot assemble an empty sentence");
  if (max_length < query.size() + 4) throw ConfigError("max length leaves no room for sentence tokens after the query");
  ControlSequence seq;
  seq.items.push_back(control(ControlToken::kBos));
  for (const auto& q : query) seq.items.push_back({ControlToken::kNone, q});
  seq.items.push_back(control(ControlToken::kSep));
  append_context(seq, sentence, max_length - query.size() - 3);
  seq.items.push_back(control(ControlToken::kEos));
  return seq;
}

// --- vocabulary ----------------------------------------------------------

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> sentences, std::size_t min_frequency) {
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> order;
  for (const auto& s : sentences)
    for (const auto& tok : s)
      if (counts[tok]++ == 0) order.push_back(tok);
  std::vector<std::string> kept;
  for (auto& tok : order)
    if (counts[tok] >= min_frequency) kept.push_back(std::move(tok));
  return from_tokens(std::move(kept));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], kReserved + i).second)
      throw ParseError("vocabulary contains duplicate token '" + v.tokens_[i] + "'");
  }
  return v;
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::size_t Vocabulary::id(const SequenceItem& item) const {
  switch (item.control) {
    case ControlToken::kBos:
      return kBos;
    case ControlToken::kSep:
      return kSep;
    case ControlToken::kEos:
      return kEos;
    case ControlToken::kNone:
      break;
  }
  return id(item.text);
}

void EncoderConfig::validate() const {
  if (vocab_size < Vocabulary::kReserved) throw ConfigError("encoder vocabulary is smaller than the reserved ids");
  if (embedding_dim < 1 || hidden_dim < 1 || layers < 1) throw ConfigError("encoder dimensions must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("encoder.dropout must lie in [0,1)");
  if (max_length < 4) throw ConfigError("encoder.max_length must be >= 4");
}

// --- recurrent encoder ---------------------------------------------------

struct RecurrentEncoder::Trace final : EncodeTrace {
  std::vector<std::size_t> ids;
  nn::Matrix embedding_mask;  // empty when dropout is off
  std::vector<std::pair<nn::LstmTrace, nn::LstmTrace>> layers;
  nn::Matrix concat;       // 2d x T after dropout
  nn::Matrix concat_mask;  // empty when dropout is off
};

RecurrentEncoder::RecurrentEncoder(EncoderConfig config, Vocabulary vocabulary)
    : config_(config), vocab_(std::move(vocabulary)) {
  config_.vocab_size = vocab_.size();
  config_.validate();
  const int d = config_.hidden_dim;
  embedding_ = nn::Parameter("encoder.embedding", config_.embedding_dim, static_cast<Eigen::Index>(config_.vocab_size));
  for (int l = 0; l < config_.layers; ++l) {
    const int in = l == 0 ? config_.embedding_dim : 2 * d;
    const std::string p = "encoder.lstm" + std::to_string(l);
    layers_.emplace_back(nn::LstmDirection(p + ".fwd", in, d), nn::LstmDirection(p + ".bwd", in, d));
  }
  projection_ = nn::Parameter("encoder.projection", d, 2 * d);
  projection_bias_ = nn::Parameter("encoder.projection_bias", d, 1);

  nn::Rng rng(config_.seed);
  nn::init_uniform(embedding_.value, 1.0 / std::sqrt(static_cast<double>(config_.embedding_dim)), rng);
  for (auto& [fwd, bwd] : layers_) {
    fwd.initialize(rng);
    bwd.initialize(rng);
  }
  nn::init_uniform(projection_.value, 1.0 / std::sqrt(2.0 * d), rng);
}

nn::ParameterRefs RecurrentEncoder::parameters() {
  nn::ParameterRefs out{&embedding_};
  for (auto& [fwd, bwd] : layers_) {
    for (auto* p : fwd.parameters()) out.push_back(p);
    for (auto* p : bwd.parameters()) out.push_back(p);
  }
  out.push_back(&projection_);
  out.push_back(&projection_bias_);
  return out;
}

namespace {

nn::Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, nn::Rng& rng) {
  nn::Matrix mask(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = rng.uniform() < rate ? 0.0 : keep;
  return mask;
}

}  // namespace

EncodedSequence RecurrentEncoder::run(const ControlSequence& sequence, nn::Rng* rng, Trace* trace) const {
  const auto steps = static_cast<Eigen::Index>(sequence.size());
  if (steps == 0) throw EmptyInput("cannot encode an empty sequence");
  const bool drop = rng != nullptr && config_.dropout > 0.0;
  const Eigen::Index d = config_.hidden_dim;

  nn::Matrix x(config_.embedding_dim, steps);
  std::vector<std::size_t> ids(sequence.size());
  for (Eigen::Index t = 0; t < steps; ++t) {
    ids[t] = vocab_.id(sequence.items[static_cast<std::size_t>(t)]);
    x.col(t) = embedding_.value.col(static_cast<Eigen::Index>(ids[t]));
  }
  if (drop) {
    nn::Matrix mask = dropout_mask(x.rows(), x.cols(), config_.dropout, *rng);
    x.array() *= mask.array();
    if (trace) trace->embedding_mask = std::move(mask);
  }

  for (const auto& [fwd, bwd] : layers_) {
    nn::LstmTrace tf, tb;
    nn::Matrix hf = fwd.forward(x, trace ? &tf : nullptr);
    nn::Matrix rev = x.rowwise().reverse();
    nn::Matrix hb = bwd.forward(rev, trace ? &tb : nullptr).rowwise().reverse();
    x.resize(2 * d, steps);
    x.topRows(d) = hf;
    x.bottomRows(d) = hb;
    if (trace) trace->layers.emplace_back(std::move(tf), std::move(tb));
  }
  // Row 0 summarises the whole sequence.
  nn::Vector head(2 * d);
  head << x.block(0, steps - 1, d, 1), x.block(d, 0, d, 1);
  x.col(0) = head;
  if (drop) {
    nn::Matrix mask = dropout_mask(x.rows(), x.cols(), config_.dropout, *rng);
    x.array() *= mask.array();
    if (trace) trace->concat_mask = std::move(mask);
  }
  nn::Matrix out = projection_.value * x;
  out.colwise() += projection_bias_.value.col(0);

  if (trace) {
    trace->ids = std::move(ids);
    trace->concat = std::move(x);
  }
  return {out.transpose(), sequence.alignment};
}

EncodedSequence RecurrentEncoder::encode(const ControlSequence& sequence) const { return run(sequence, nullptr, nullptr); }

std::unique_ptr<EncodeTrace> RecurrentEncoder::encode_for_training(const ControlSequence& sequence, nn::Rng& rng,
                                                                   EncodedSequence& out) {
  auto trace = std::make_unique<Trace>();
  out = run(sequence, &rng, trace.get());
  return trace;
}

void RecurrentEncoder::backward(const EncodeTrace& base, const nn::Matrix& d_states) {
  const auto& trace = dynamic_cast<const Trace&>(base);
  const Eigen::Index d = config_.hidden_dim;
  const Eigen::Index steps = trace.concat.cols();

  nn::Matrix d_out = d_states.transpose();  // d x T
  projection_.grad.noalias() += d_out * trace.concat.transpose();
  projection_bias_.grad.col(0) += d_out.rowwise().sum();
  nn::Matrix d_concat = projection_.value.transpose() * d_out;
  if (trace.concat_mask.size() > 0) d_concat.array() *= trace.concat_mask.array();

  // Undo the row-0 substitution.
  nn::Matrix dx = d_concat;
  dx.col(0).setZero();
  dx.block(0, steps - 1, d, 1) += d_concat.block(0, 0, d, 1);
  dx.block(d, 0, d, 1) += d_concat.block(d, 0, d, 1);

  for (std::size_t l = layers_.size(); l-- > 0;) {
    auto& [fwd, bwd] = layers_[l];
    const auto& [tf, tb] = trace.layers[l];
    nn::Matrix d_hb_rev = dx.bottomRows(d).rowwise().reverse();
    nn::Matrix d_in = fwd.backward(tf, dx.topRows(d));
    d_in += bwd.backward(tb, d_hb_rev).rowwise().reverse();
    dx = std::move(d_in);
  }
  if (trace.embedding_mask.size() > 0) dx.array() *= trace.embedding_mask.array();
  for (Eigen::Index t = 0; t < steps; ++t)
    embedding_.grad.col(static_cast<Eigen::Index>(trace.ids[static_cast<std::size_t>(t)])) += dx.col(t);
}

// --- external adapter ----------------------------------------------------

std::size_t RecurrentEncoder::copy_embeddings_from(const RecurrentEncoder& source) {
  if (source.config_.embedding_dim != config_.embedding_dim)
    throw ConfigError("cannot share embeddings of width " + std::to_string(source.config_.embedding_dim) + " with width " +
                      std::to_string(config_.embedding_dim));
  std::size_t copied = 0;
  for (std::size_t id = 0; id < Vocabulary::kReserved; ++id, ++copied)
    embedding_.value.col(static_cast<Eigen::Index>(id)) = source.embedding_.value.col(static_cast<Eigen::Index>(id));
  for (std::size_t i = 0; i < vocab_.tokens().size(); ++i) {
    const std::size_t from = source.vocab_.id(vocab_.tokens()[i]);
    if (from == Vocabulary::kUnk) continue;
    embedding_.value.col(static_cast<Eigen::Index>(Vocabulary::kReserved + i)) =
        source.embedding_.value.col(static_cast<Eigen::Index>(from));
    ++copied;
  }
  return copied;
}

EncodedSequence ExternalEncoder::encode(const ControlSequence& sequence) const {
  nn::Matrix states = fn_(sequence);
  if (states.rows() != static_cast<Eigen::Index>(sequence.size()) || states.cols() != dim_)
    throw ShapeError("external encoder returned " + std::to_string(states.rows()) + "x" + std::to_string(states.cols()) +
                     ", expected " + std::to_string(sequence.size()) + "x" + std::to_string(dim_));
  return {std::move(states), sequence.alignment};
}

std::unique_ptr<EncodeTrace> ExternalEncoder::encode_for_training(const ControlSequence& sequence, nn::Rng&,
                                                                  EncodedSequence& out) {
  out = encode(sequence);
  return std::make_unique<EncodeTrace>();
}

}  // namespace rere
