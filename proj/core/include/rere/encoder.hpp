#ifndef RERE_ENCODER_HPP
#define RERE_ENCODER_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rere/datamodel.hpp"
#include "rere/nn.hpp"

namespace rere {

enum class ControlToken : std::uint8_t { kNone, kBos, kSep, kEos };

struct SequenceItem {
  ControlToken control = ControlToken::kNone;
  std::string text;  // empty for control tokens

  friend bool operator==(const SequenceItem&, const SequenceItem&) = default;
};

// An encoder input: control tokens plus text, with the row of every context
// (sentence) token. Rows of query tokens never appear in `alignment`.
struct ControlSequence {
  std::vector<SequenceItem> items;
  std::vector<std::size_t> alignment;  // context token i -> row alignment[i]
  std::size_t context_length = 0;      // tokens of the sentence before truncation
  bool truncated = false;

  std::size_t size() const noexcept { return items.size(); }
};

inline constexpr std::size_t kDefaultMaxLength = 128;

// [BOS] + sentence + [EOS]. Sentences longer than max_length - 2 lose their
// tail (a warning is logged and `truncated` is set).
ControlSequence assemble_rc_input(std::span<const std::string> sentence, std::size_t max_length = kDefaultMaxLength);
// [BOS] + query + [SEP] + sentence + [EOS]. Only the sentence is truncated.
ControlSequence assemble_ee_input(std::span<const std::string> query, std::span<const std::string> sentence,
                                  std::size_t max_length = kDefaultMaxLength);

// Contextual representations of one assembled sequence. Row 0 (the BOS row)
// doubles as the sentence vector.
struct EncodedSequence {
  nn::Matrix states;  // sequence length x d
  std::vector<std::size_t> alignment;

  Eigen::Index dim() const noexcept { return states.cols(); }
  nn::Vector sentence_vector() const { return states.row(0).transpose(); }
};

// Token-to-id map. Ids 0..3 are reserved for UNK, BOS, SEP and EOS.
class Vocabulary {
 public:
  static constexpr std::size_t kUnk = 0, kBos = 1, kSep = 2, kEos = 3, kReserved = 4;

  Vocabulary() = default;
  // Every token appearing at least `min_frequency` times, in first-seen order.
  static Vocabulary build(std::span<const std::vector<std::string>> sentences, std::size_t min_frequency = 1);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t id(const std::string& token) const;
  std::size_t id(const SequenceItem& item) const;
  std::size_t size() const noexcept { return kReserved + tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }  // non-reserved, in id order

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EncoderConfig {
  std::size_t vocab_size = 0;  // filled from the vocabulary
  int embedding_dim = 32;
  int hidden_dim = 32;  // d; also the per-direction LSTM width
  int layers = 1;
  double dropout = 0.1;
  std::uint64_t seed = 1;
  std::size_t max_length = kDefaultMaxLength;

  void validate() const;  // ConfigError

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Opaque per-sequence state a trainable encoder keeps between its forward
// and backward passes.
struct EncodeTrace {
  virtual ~EncodeTrace() = default;
};

// Pluggable encoder seam. Heads only see EncodedSequence; trainable
// backends additionally support gradient flow to their parameters.
class TokenEncoder {
 public:
  virtual ~TokenEncoder() = default;

  virtual int dim() const = 0;
  virtual std::size_t max_length() const = 0;
  // Inference mode: deterministic for fixed parameters.
  virtual EncodedSequence encode(const ControlSequence& sequence) const = 0;
  // Training mode (dropout active). Returns the trace backward() needs.
  virtual std::unique_ptr<EncodeTrace> encode_for_training(const ControlSequence& sequence, nn::Rng& rng,
                                                           EncodedSequence& out) = 0;
  // Accumulates d loss / d parameters given d loss / d states.
  virtual void backward(const EncodeTrace& trace, const nn::Matrix& d_states) = 0;
  virtual nn::ParameterRefs parameters() = 0;
};

// Embedding -> stacked bidirectional LSTM -> linear projection to d. Row 0
// carries the projection of [last forward state; first backward state],
// every other row the projection of that position's two directional states.
class RecurrentEncoder final : public TokenEncoder {
 public:
  RecurrentEncoder(EncoderConfig config, Vocabulary vocabulary);

  int dim() const override { return config_.hidden_dim; }
  std::size_t max_length() const override { return config_.max_length; }
  EncodedSequence encode(const ControlSequence& sequence) const override;
  std::unique_ptr<EncodeTrace> encode_for_training(const ControlSequence& sequence, nn::Rng& rng,
                                                   EncodedSequence& out) override;
  void backward(const EncodeTrace& trace, const nn::Matrix& d_states) override;
  nn::ParameterRefs parameters() override;

  const EncoderConfig& config() const noexcept { return config_; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }

  // Overwrites the embedding of every token (and reserved id) known to both
  // vocabularies with the source's. Returns the number of columns copied;
  // ConfigError when the embedding widths differ.
  std::size_t copy_embeddings_from(const RecurrentEncoder& source);

 private:
  struct Trace;
  EncodedSequence run(const ControlSequence& sequence, nn::Rng* rng, Trace* trace) const;

  EncoderConfig config_;
  Vocabulary vocab_;
  nn::Parameter embedding_;  // embedding_dim x vocab
  std::vector<std::pair<nn::LstmDirection, nn::LstmDirection>> layers_;
  nn::Parameter projection_;       // d x 2d
  nn::Parameter projection_bias_;  // d x 1
};

// Adapter for an external (e.g. pretrained transformer) encoder: a callable
// mapping the assembled sequence to its states. Frozen; no parameters.
class ExternalEncoder final : public TokenEncoder {
 public:
  using Function = std::function<nn::Matrix(const ControlSequence&)>;

  ExternalEncoder(int dim, Function fn, std::size_t max_length = kDefaultMaxLength)
      : dim_(dim), max_length_(max_length), fn_(std::move(fn)) {}

  int dim() const override { return dim_; }
  std::size_t max_length() const override { return max_length_; }
  EncodedSequence encode(const ControlSequence& sequence) const override;
  std::unique_ptr<EncodeTrace> encode_for_training(const ControlSequence& sequence, nn::Rng& rng,
                                                   EncodedSequence& out) override;
  void backward(const EncodeTrace&, const nn::Matrix&) override {}
  nn::ParameterRefs parameters() override { return {}; }

 private:
  int dim_;
  std::size_t max_length_;
  Function fn_;
};

}  // namespace rere

#endif  // RERE_ENCODER_HPP
