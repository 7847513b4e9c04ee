#ifndef RERE_PIPELINE_HPP
#define RERE_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rere/datamodel.hpp"
#include "rere/encoder.hpp"
#include "rere/entity_extractor.hpp"
#include "rere/pu_loss.hpp"
#include "rere/relation_classifier.hpp"

namespace rere {

enum class Stage { kRc, kEe };
Stage parse_stage(std::string_view text);  // "rc" | "ee"
std::string_view to_string(Stage stage);

// How the relation score and the four boundary probabilities combine into
// one triple confidence.
enum class ScoreCombine { kMin, kProduct };
ScoreCombine parse_score_combine(std::string_view text);  // "min" | "product"
std::string_view to_string(ScoreCombine combine);

struct TrainConfig {
  Stage stage = Stage::kRc;
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";  // the only one shipped
  int patience = 5;
  std::uint64_t seed = 1;
  pu::LossKind loss = pu::LossKind::kCollectivePu;

  // Collective PU settings for this stage. An absent pi is estimated from
  // the training set.
  std::optional<double> pi;
  double tau = 0.0;
  double gamma = 0.5;
  double epsilon = 1e-7;
  double bce_positive_weight = 1.0;

  double negative_query_prob = 0.2;  // stage ee only
  double grad_clip = 5.0;            // <= 0 disables clipping
  std::size_t min_vocab_frequency = 1;
  EncoderConfig encoder;

  // Used for the dev metric during model selection.
  double rc_threshold = 0.5;
  double ee_threshold = 0.5;

  void validate() const;  // ConfigError
};

// Every field of the config as a JSON object (for echoing into artifacts).
std::string to_json(const TrainConfig& config);

struct TrainLogEntry {
  int epoch = 0;
  long step = 0;
  double loss = 0.0;
  double dev_f1 = 0.0;
};
using TrainLogSink = std::function<void(const TrainLogEntry&)>;
std::string to_json_line(const TrainLogEntry& entry);  // {"epoch":..,"step":..,"loss":..,"dev_f1":..}

// Training sentences, plus every query token for stage ee.
Vocabulary build_vocabulary(const Dataset& train, Stage stage, std::size_t min_frequency = 1);

RelationClassifier make_relation_classifier(const Dataset& train, const TrainConfig& config);
EntityExtractor make_entity_extractor(const Dataset& train, const TrainConfig& config);

// Minibatch optimisation of one stage. step() runs one optimizer update on
// the batch and returns its mean training loss; batch_loss() evaluates the
// same objective in inference mode without touching the parameters.
class RcTrainer {
 public:
  RcTrainer(RelationClassifier& model, const TrainConfig& config, double pi);

  double step(std::span<const LabeledInstance> batch);
  double batch_loss(std::span<const LabeledInstance> batch) const;
  const pu::PuLossConfig& pu_config() const noexcept { return pu_; }
  long steps() const noexcept { return steps_; }
  void set_epoch(int epoch) noexcept { epoch_ = epoch; }

 private:
  double sample_loss(const nn::Vector& scores, const nn::Vector& labels, nn::Vector* grad) const;

  RelationClassifier* model_;
  TrainConfig config_;
  pu::PuLossConfig pu_;
  nn::ParameterRefs params_;
  nn::Adam adam_;
  nn::Rng rng_;
  long steps_ = 0;
  int epoch_ = 0;
};

class EeTrainer {
 public:
  EeTrainer(EntityExtractor& model, const TrainConfig& config, double pi);

  double step(std::span<const LabeledInstance> batch);
  double batch_loss(std::span<const LabeledInstance> batch) const;
  const pu::PuLossConfig& pu_config() const noexcept { return pu_; }
  long steps() const noexcept { return steps_; }
  void set_epoch(int epoch) noexcept { epoch_ = epoch; }

 private:
  double sample_loss(const nn::Matrix& grid, const nn::Matrix& labels, nn::Matrix* grad) const;

  EntityExtractor* model_;
  TrainConfig config_;
  pu::PuLossConfig pu_;
  nn::ParameterRefs params_;
  nn::Adam adam_;
  nn::Rng rng_;
  long steps_ = 0;
  int epoch_ = 0;
};

// Dev metrics used for model selection: micro-F1 of relation sets (rc) and
// exact-match triple F1 with gold relations as queries (ee).
double rc_dev_f1(const RelationClassifier& model, const Dataset& dev, double threshold);
double ee_dev_f1(const EntityExtractor& model, const Dataset& dev, double threshold);

// Full training run: per-epoch log entries, best-dev-F1 parameters restored
// at the end, early stop after `patience` epochs without improvement. An
// empty dev set disables selection. Non-finite loss -> TrainingError.
RelationClassifier train_relation_classifier(const Dataset& train, const Dataset& dev, const TrainConfig& config,
                                             const TrainLogSink& log = {});
// `share_embeddings_from` (optional) seeds the stage-2 token embeddings with
// a trained stage-1 encoder's before the first update.
EntityExtractor train_entity_extractor(const Dataset& train, const Dataset& dev, const TrainConfig& config,
                                       const TrainLogSink& log = {},
                                       const RelationClassifier* share_embeddings_from = nullptr);

// Trained models of one or both stages, with the configuration they were
// produced under (opaque JSON text, echoed into the checkpoint file).
struct Checkpoint {
  RelationCatalog catalog;
  std::optional<RelationClassifier> rc;
  std::optional<EntityExtractor> ee;
  std::string config_json = "{}";
};

// Trains the stage named in config.stage. Both datasets must share the
// training catalog (CatalogError otherwise).
Checkpoint train_stage(const Dataset& train, const Dataset& dev, const TrainConfig& config,
                       const TrainLogSink& log = {}, const RelationClassifier* share_embeddings_from = nullptr);

// Copies the stage-1 token embeddings into the stage-2 encoder (both must be
// recurrent with equal embedding width; ConfigError otherwise).
std::size_t share_embeddings(const RelationClassifier& from, EntityExtractor& to);

struct InferenceOptions {
  double rc_threshold = 0.5;
  double ee_threshold = 0.5;
  ScoreCombine combine = ScoreCombine::kMin;
};

// decide(score_relations(c)) then one extractor query per decided relation.
// Triple score = relation score x (min | product) of the boundary
// probabilities. CatalogError when the models disagree on the catalog.
std::vector<ScoredTriple> infer(std::span<const std::string> sentence, const RelationClassifier& rc,
                                const EntityExtractor& ee, const InferenceOptions& options = {});
PredictionSet predict_corpus(const Dataset& dataset, const RelationClassifier& rc, const EntityExtractor& ee,
                             const InferenceOptions& options = {});

// log Pr(T | c) under the factorised Bernoulli model: every relation label
// of stage 1 plus every pointer cell of stage 2 for each gold relation.
double log_likelihood(const LabeledInstance& instance, const RelationClassifier& rc, const EntityExtractor& ee);

// Versioned JSON with a payload checksum. Only recurrent encoders can be
// stored. Loading validates everything before returning (CheckpointError on
// corruption, version or catalog mismatch).
inline constexpr int kCheckpointVersion = 1;
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path, const RelationCatalog* expected_catalog = nullptr);

// Stage-1 and stage-2 checkpoints written separately, joined for inference.
Checkpoint merge_checkpoints(Checkpoint rc_part, Checkpoint ee_part);

}  // namespace rere

#endif  // RERE_PIPELINE_HPP
