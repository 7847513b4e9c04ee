#include "rere/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rere/errors.hpp"
#include "rere/evalkit.hpp"
#include "rere/labels.hpp"

namespace rere {

using json = nlohmann::json;

Stage parse_stage(std::string_view text) {
  if (text == "rc") return Stage::kRc;
  if (text == "ee") return Stage::kEe;
  throw ConfigError("stage must be 'rc' or 'ee', got '" + std::string(text) + "'");
}

std::string_view to_string(Stage stage) { return stage == Stage::kRc ? "rc" : "ee"; }

ScoreCombine parse_score_combine(std::string_view text) {
  if (text == "min") return ScoreCombine::kMin;
  if (text == "product") return ScoreCombine::kProduct;
  throw ConfigError("score combination must be 'min' or 'product', got '" + std::string(text) + "'");
}

std::string_view to_string(ScoreCombine combine) { return combine == ScoreCombine::kMin ? "min" : "product"; }

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.lr must be > 0");
  if (optimizer != "adam") throw ConfigError("train.optimizer must be 'adam', got '" + optimizer + "'");
  if (patience < 1) throw ConfigError("train.patience must be >= 1");
  if (!(negative_query_prob >= 0.0 && negative_query_prob <= 1.0))
    throw ConfigError("train.negative_query_prob must lie in [0,1]");
  if (!(bce_positive_weight > 0.0)) throw ConfigError("loss.bce_positive_weight must be > 0");
  if (!(rc_threshold > 0.0 && rc_threshold < 1.0)) throw ConfigError("infer.rc_threshold must lie in (0,1)");
  if (!(ee_threshold > 0.0 && ee_threshold < 1.0)) throw ConfigError("infer.ee_threshold must lie in (0,1)");
  if (min_vocab_frequency < 1) throw ConfigError("encoder.min_frequency must be >= 1");
  pu::PuLossConfig pu{pi.value_or(0.0), tau, gamma, epsilon};
  pu.validate();
  EncoderConfig enc = encoder;
  enc.vocab_size = Vocabulary::kReserved;
  enc.validate();
}

std::string to_json(const TrainConfig& c) {
  json j{{"stage", std::string(to_string(c.stage))},
         {"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"lr", c.learning_rate},
         {"optimizer", c.optimizer},
         {"patience", c.patience},
         {"seed", c.seed},
         {"loss", std::string(pu::to_string(c.loss))},
         {"tau", c.tau},
         {"gamma", c.gamma},
         {"epsilon", c.epsilon},
         {"bce_positive_weight", c.bce_positive_weight},
         {"negative_query_prob", c.negative_query_prob},
         {"grad_clip", c.grad_clip},
         {"min_vocab_frequency", c.min_vocab_frequency},
         {"rc_threshold", c.rc_threshold},
         {"ee_threshold", c.ee_threshold},
         {"encoder",
          {{"embedding_dim", c.encoder.embedding_dim},
           {"hidden_dim", c.encoder.hidden_dim},
           {"layers", c.encoder.layers},
           {"dropout", c.encoder.dropout},
           {"max_length", c.encoder.max_length}}}};
  j["pi"] = c.pi ? json(*c.pi) : json(nullptr);
  return j.dump();
}

std::string to_json_line(const TrainLogEntry& e) {
  return json{{"epoch", e.epoch}, {"step", e.step}, {"loss", e.loss}, {"dev_f1", e.dev_f1}}.dump();
}

// --- model construction --------------------------------------------------

Vocabulary build_vocabulary(const Dataset& train, Stage stage, std::size_t min_frequency) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(train.size() + train.catalog.size());
  for (const auto& inst : train.instances) sentences.push_back(inst.tokens);
  auto vocab = Vocabulary::build(sentences, min_frequency);
  if (stage == Stage::kEe) {
    // Queries are always known, whatever their corpus frequency.
    auto tokens = vocab.tokens();
    std::set<std::string> seen(tokens.begin(), tokens.end());
    for (const auto& e : train.catalog.entries())
      for (auto& q : tokenize_words(e.query))
        if (seen.insert(q).second) tokens.push_back(std::move(q));
    vocab = Vocabulary::from_tokens(std::move(tokens));
  }
  return vocab;
}

namespace {

std::unique_ptr<TokenEncoder> make_encoder(const Dataset& train, const TrainConfig& config) {
  EncoderConfig enc = config.encoder;
  enc.seed = config.seed * 2 + (config.stage == Stage::kRc ? 0 : 1);
  return std::make_unique<RecurrentEncoder>(enc, build_vocabulary(train, config.stage, config.min_vocab_frequency));
}

}  // namespace

RelationClassifier make_relation_classifier(const Dataset& train, const TrainConfig& config) {
  TrainConfig c = config;
  c.stage = Stage::kRc;
  return RelationClassifier(train.catalog, make_encoder(train, c), config.seed);
}

EntityExtractor make_entity_extractor(const Dataset& train, const TrainConfig& config) {
  TrainConfig c = config;
  c.stage = Stage::kEe;
  return EntityExtractor(train.catalog, make_encoder(train, c), config.seed);
}

// --- trainers ------------------------------------------------------------

namespace {

std::span<const double> as_span(const nn::Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void zero_grads(const nn::ParameterRefs& params) {
  for (auto* p : params) p->zero_grad();
}

void check_finite(double loss, int epoch, long step) {
  if (!std::isfinite(loss)) throw TrainingError("loss diverged (" + std::to_string(loss) + ")", epoch, step);
}

pu::PuLossConfig make_pu(const TrainConfig& config, double pi) {
  pu::PuLossConfig pu{pi, config.tau, config.gamma, config.epsilon};
  pu.validate();
  return pu;
}

}  // namespace

RcTrainer::RcTrainer(RelationClassifier& model, const TrainConfig& config, double pi)
    : model_(&model),
      config_(config),
      pu_(make_pu(config, pi)),
      params_(model.parameters()),
      adam_(config.learning_rate),
      rng_(config.seed ^ 0x7263'7472'6169'6eULL) {}

double RcTrainer::sample_loss(const nn::Vector& scores, const nn::Vector& labels, nn::Vector* grad) const {
  if (config_.loss == pu::LossKind::kCollectivePu) {
    if (grad) *grad = pu::loss_rc_grad(as_span(scores), as_span(labels), pu_);
    return pu::loss_rc(as_span(scores), as_span(labels), pu_);
  }
  if (grad) *grad = pu::bce_baseline_grad(as_span(scores), as_span(labels), config_.bce_positive_weight);
  return pu::bce_baseline(as_span(scores), as_span(labels), config_.bce_positive_weight);
}

double RcTrainer::step(std::span<const LabeledInstance> batch) {
  if (batch.empty()) throw EmptyInput("empty training batch");
  zero_grads(params_);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  nn::Vector grad;
  for (const auto& inst : batch) {
    auto pass = model_->forward_train(inst.tokens, rng_);
    const double loss = sample_loss(pass.scores, rc_label_vector(inst, model_->catalog()), &grad);
    check_finite(loss, epoch_, steps_ + 1);
    total += loss;
    model_->backward(pass, grad * scale);
  }
  const double norm = nn::clip_grad_norm(params_, config_.grad_clip);
  check_finite(norm, epoch_, steps_ + 1);
  adam_.step(params_);
  ++steps_;
  return total * scale;
}

double RcTrainer::batch_loss(std::span<const LabeledInstance> batch) const {
  if (batch.empty()) throw EmptyInput("empty batch");
  double total = 0.0;
  for (const auto& inst : batch) {
    const auto s = model_->score_relations(inst.tokens);
    const nn::Vector scores = Eigen::Map<const nn::Vector>(s.scores.data(), static_cast<Eigen::Index>(s.scores.size()));
    total += sample_loss(scores, rc_label_vector(inst, model_->catalog()), nullptr);
  }
  return total / static_cast<double>(batch.size());
}

EeTrainer::EeTrainer(EntityExtractor& model, const TrainConfig& config, double pi)
    : model_(&model),
      config_(config),
      pu_(make_pu(config, pi)),
      params_(model.parameters()),
      adam_(config.learning_rate),
      rng_(config.seed ^ 0x6565'7472'6169'6eULL) {}

double EeTrainer::sample_loss(const nn::Matrix& grid, const nn::Matrix& labels, nn::Matrix* grad) const {
  if (config_.loss == pu::LossKind::kCollectivePu) {
    if (grad) *grad = pu::loss_ee_grad(grid, labels, pu_);
    return pu::loss_ee(grid, labels, pu_);
  }
  const std::span<const double> s(grid.data(), static_cast<std::size_t>(grid.size()));
  const std::span<const double> y(labels.data(), static_cast<std::size_t>(labels.size()));
  if (grad) {
    const nn::Vector g = pu::bce_baseline_grad(s, y, config_.bce_positive_weight);
    *grad = Eigen::Map<const nn::Matrix>(g.data(), grid.rows(), grid.cols());
  }
  return pu::bce_baseline(s, y, config_.bce_positive_weight);
}

double EeTrainer::step(std::span<const LabeledInstance> batch) {
  if (batch.empty()) throw EmptyInput("empty training batch");
  const std::size_t r = model_->catalog().size();
  std::vector<std::pair<const LabeledInstance*, RelationId>> queries;
  for (const auto& inst : batch) {
    const auto gold = inst.relations();
    for (RelationId rel : gold) queries.emplace_back(&inst, rel);
    if (gold.size() < r && rng_.bernoulli(config_.negative_query_prob)) {
      std::vector<RelationId> others;
      for (std::size_t j = 0; j < r; ++j)
        if (!std::binary_search(gold.begin(), gold.end(), RelationId(j))) others.emplace_back(j);
      queries.emplace_back(&inst, others[rng_.below(others.size())]);
    }
  }
  zero_grads(params_);
  if (queries.empty()) {
    ++steps_;
    return 0.0;
  }
  const double scale = 1.0 / static_cast<double>(queries.size());
  double total = 0.0;
  nn::Matrix grad;
  for (const auto& [inst, rel] : queries) {
    auto pass = model_->forward_train(rel, inst->tokens, rng_);
    const nn::Matrix labels = ee_label_grid(*inst, rel).topRows(pass.grid.rows());
    const double loss = sample_loss(pass.grid, labels, &grad);
    check_finite(loss, epoch_, steps_ + 1);
    total += loss;
    model_->backward(pass, grad * scale);
  }
  const double norm = nn::clip_grad_norm(params_, config_.grad_clip);
  check_finite(norm, epoch_, steps_ + 1);
  adam_.step(params_);
  ++steps_;
  return total * scale;
}

double EeTrainer::batch_loss(std::span<const LabeledInstance> batch) const {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& inst : batch) {
    for (RelationId rel : inst.relations()) {
      const auto g = model_->score_pointers(rel, inst.tokens);
      total += sample_loss(g.grid, ee_label_grid(inst, rel), nullptr);
      ++count;
    }
  }
  if (count == 0) throw EmptyInput("batch has no gold relations to query");
  return total / static_cast<double>(count);
}

// --- dev metrics ---------------------------------------------------------

double rc_dev_f1(const RelationClassifier& model, const Dataset& dev, double threshold) {
  eval::Counts c;
  for (const auto& inst : dev.instances) {
    const auto pred = decide(model.score_relations(inst.tokens, threshold));
    const auto gold = inst.relations();
    std::vector<RelationId> common;
    std::set_intersection(pred.begin(), pred.end(), gold.begin(), gold.end(), std::back_inserter(common));
    c += {common.size(), pred.size() - common.size(), gold.size() - common.size()};
  }
  return eval::MetricsReport::from_counts(c).f1;
}

double ee_dev_f1(const EntityExtractor& model, const Dataset& dev, double threshold) {
  eval::Counts c;
  std::vector<Triple> pred;
  for (const auto& inst : dev.instances) {
    pred.clear();
    const auto gold = inst.relations();
    for (const auto& x : model.extract(gold, inst.tokens, threshold)) pred.push_back(x.triple);
    c += eval::match_sentence(pred, inst.triples, eval::MatchMode::kExact);
  }
  return eval::MetricsReport::from_counts(c).f1;
}

// --- training loop -------------------------------------------------------

namespace {

template <typename Model, typename Trainer, typename DevMetric>
void run_training(Model& model, Trainer& trainer, const Dataset& train, const Dataset& dev, const TrainConfig& config,
                  DevMetric dev_metric, const TrainLogSink& log) {
  if (config.epochs == 0) return;
  if (train.empty()) throw EmptyInput("empty training set");
  nn::Rng order_rng(config.seed ^ 0x6f72'6465'72ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const auto params = model.parameters();
  std::vector<nn::Matrix> best;
  double best_f1 = -1.0;
  int since_best = 0;
  std::vector<LabeledInstance> batch;
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    trainer.set_epoch(epoch);
    order_rng.shuffle(order);
    double sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += bs) {
      batch.clear();
      for (std::size_t k = b; k < std::min(order.size(), b + bs); ++k) batch.push_back(train.instances[order[k]]);
      sum += trainer.step(batch) * static_cast<double>(batch.size());
    }
    TrainLogEntry entry{epoch, trainer.steps(), sum / static_cast<double>(train.size()), 0.0};
    if (!dev.empty()) entry.dev_f1 = dev_metric(model);
    if (log) log(entry);
    if (dev.empty()) continue;
    if (entry.dev_f1 > best_f1) {
      best_f1 = entry.dev_f1;
      best.clear();
      for (auto* p : params) best.push_back(p->value);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  if (!best.empty())
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
}

double stage_prior(const Dataset& train, const TrainConfig& config, pu::Task task) {
  if (config.pi) return *config.pi;
  if (config.loss != pu::LossKind::kCollectivePu) return 0.0;
  return pu::estimate_prior(train, task);
}

void check_catalogs(const Dataset& train, const Dataset& dev) {
  if (!dev.empty() && !(dev.catalog == train.catalog))
    throw CatalogError("training and dev datasets use different catalogs");
}

}  // namespace

RelationClassifier train_relation_classifier(const Dataset& train, const Dataset& dev, const TrainConfig& config,
                                             const TrainLogSink& log) {
  config.validate();
  check_catalogs(train, dev);
  auto model = make_relation_classifier(train, config);
  RcTrainer trainer(model, config, stage_prior(train, config, pu::Task::kRelation));
  run_training(
      model, trainer, train, dev, config,
      [&](const RelationClassifier& m) { return rc_dev_f1(m, dev, config.rc_threshold); }, log);
  return model;
}

std::size_t share_embeddings(const RelationClassifier& from, EntityExtractor& to) {
  const auto* src = dynamic_cast<const RecurrentEncoder*>(&from.encoder());
  auto* dst = dynamic_cast<RecurrentEncoder*>(&to.encoder());
  if (!src || !dst) throw ConfigError("embedding sharing needs recurrent encoders in both stages");
  return dst->copy_embeddings_from(*src);
}

EntityExtractor train_entity_extractor(const Dataset& train, const Dataset& dev, const TrainConfig& config,
                                       const TrainLogSink& log, const RelationClassifier* share_embeddings_from) {
  config.validate();
  check_catalogs(train, dev);
  auto model = make_entity_extractor(train, config);
  if (share_embeddings_from) share_embeddings(*share_embeddings_from, model);
  EeTrainer trainer(model, config, stage_prior(train, config, pu::Task::kEntity));
  run_training(
      model, trainer, train, dev, config,
      [&](const EntityExtractor& m) { return ee_dev_f1(m, dev, config.ee_threshold); }, log);
  model.reset_invocation_count();
  return model;
}

Checkpoint train_stage(const Dataset& train, const Dataset& dev, const TrainConfig& config, const TrainLogSink& log,
                       const RelationClassifier* share_embeddings_from) {
  Checkpoint out;
  out.catalog = train.catalog;
  out.config_json = to_json(config);
  if (config.stage == Stage::kRc)
    out.rc = train_relation_classifier(train, dev, config, log);
  else
    out.ee = train_entity_extractor(train, dev, config, log, share_embeddings_from);
  return out;
}

// --- inference -----------------------------------------------------------

std::vector<ScoredTriple> infer(std::span<const std::string> sentence, const RelationClassifier& rc,
                                const EntityExtractor& ee, const InferenceOptions& options) {
  if (!(rc.catalog() == ee.catalog())) throw CatalogError("stage-1 and stage-2 models use different catalogs");
  const auto scores = rc.score_relations(sentence, options.rc_threshold);
  const auto relations = decide(scores);
  if (relations.empty()) return {};
  std::map<Triple, double> best;
  for (const auto& x : ee.extract(relations, sentence, options.ee_threshold)) {
    const auto& b = x.pair.boundary;
    const double boundary =
        options.combine == ScoreCombine::kMin ? std::min({b[0], b[1], b[2], b[3]}) : b[0] * b[1] * b[2] * b[3];
    const double score = scores.scores[x.triple.relation.index()] * boundary;
    auto [it, inserted] = best.emplace(x.triple, score);
    if (!inserted) it->second = std::max(it->second, score);
  }
  std::vector<ScoredTriple> out;
  out.reserve(best.size());
  for (const auto& [t, s] : best) out.push_back({t, s});
  return out;
}

PredictionSet predict_corpus(const Dataset& dataset, const RelationClassifier& rc, const EntityExtractor& ee,
                             const InferenceOptions& options) {
  PredictionSet out;
  out.catalog = rc.catalog();
  out.instances.reserve(dataset.size());
  for (const auto& inst : dataset.instances) out.instances.push_back({inst.tokens, infer(inst.tokens, rc, ee, options)});
  return out;
}

double log_likelihood(const LabeledInstance& instance, const RelationClassifier& rc, const EntityExtractor& ee) {
  if (!(rc.catalog() == ee.catalog())) throw CatalogError("stage-1 and stage-2 models use different catalogs");
  auto bernoulli = [](double p, double y) { return y > 0.5 ? std::log(p) : std::log1p(-p); };
  const auto scores = rc.score_relations(instance.tokens).scores;
  const auto y = rc_label_vector(instance, rc.catalog());
  double ll = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) ll += bernoulli(scores[j], y(static_cast<Eigen::Index>(j)));
  for (RelationId rel : instance.relations()) {
    const auto grid = ee.score_pointers(rel, instance.tokens).grid;
    const auto labels = ee_label_grid(instance, rel);
    for (Eigen::Index n = 0; n < grid.rows(); ++n)
      for (Eigen::Index k = 0; k < 4; ++k) ll += bernoulli(grid(n, k), labels(n, k));
  }
  return ll;
}

// --- checkpoints ---------------------------------------------------------

namespace {

constexpr const char* kFormat = "rere-checkpoint";

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json catalog_to_json(const RelationCatalog& catalog) {
  json arr = json::array();
  for (const auto& e : catalog.entries()) arr.push_back({{"name", e.name}, {"query", e.query}});
  return arr;
}

RelationCatalog catalog_from_json(const json& arr) {
  RelationCatalog cat;
  for (const auto& e : arr) cat.add(e.at("name").get<std::string>(), e.at("query").get<std::string>());
  return cat;
}

json encoder_config_to_json(const EncoderConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"embedding_dim", c.embedding_dim}, {"hidden_dim", c.hidden_dim},
          {"layers", c.layers},         {"dropout", c.dropout},             {"seed", c.seed},
          {"max_length", c.max_length}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.layers = j.at("layers").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.max_length = j.at("max_length").get<std::size_t>();
  return c;
}

template <typename Model>
json model_to_json(const Model& model) {
  auto& m = const_cast<Model&>(model);
  const auto* enc = dynamic_cast<const RecurrentEncoder*>(&model.encoder());
  if (!enc) throw CheckpointError("only models with a recurrent encoder can be checkpointed");
  json params = json::object();
  for (const auto* p : m.parameters()) {
    std::vector<double> data(p->value.data(), p->value.data() + p->value.size());
    params[p->name] = {{"rows", p->value.rows()}, {"cols", p->value.cols()}, {"data", std::move(data)}};
  }
  return {{"encoder", {{"kind", "recurrent"}, {"config", encoder_config_to_json(enc->config())},
                       {"vocabulary", enc->vocabulary().tokens()}}},
          {"parameters", std::move(params)}};
}

template <typename Model>
Model model_from_json(const json& j, const RelationCatalog& catalog) {
  const auto& e = j.at("encoder");
  if (e.at("kind").get<std::string>() != "recurrent") throw CheckpointError("unknown encoder kind");
  auto vocab = Vocabulary::from_tokens(e.at("vocabulary").get<std::vector<std::string>>());
  const auto config = encoder_config_from_json(e.at("config"));
  if (config.vocab_size != vocab.size()) throw CheckpointError("vocabulary size does not match the encoder config");
  Model model(catalog, std::make_unique<RecurrentEncoder>(config, std::move(vocab)), 0);
  const auto& params = j.at("parameters");
  const auto refs = model.parameters();
  if (params.size() != refs.size()) throw CheckpointError("parameter count mismatch");
  for (auto* p : refs) {
    const auto it = params.find(p->name);
    if (it == params.end()) throw CheckpointError("missing parameter '" + p->name + "'");
    const auto rows = it->at("rows").template get<Eigen::Index>();
    const auto cols = it->at("cols").template get<Eigen::Index>();
    const auto data = it->at("data").template get<std::vector<double>>();
    if (rows != p->value.rows() || cols != p->value.cols() || static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw CheckpointError("parameter '" + p->name + "' has the wrong shape");
    p->value = Eigen::Map<const nn::Matrix>(data.data(), rows, cols);
  }
  return model;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  json payload{{"catalog", catalog_to_json(checkpoint.catalog)},
               {"catalog_fingerprint", checkpoint.catalog.fingerprint()}};
  try {
    payload["config"] = json::parse(checkpoint.config_json);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("config is not valid JSON: ") + e.what());
  }
  payload["rc"] = checkpoint.rc ? model_to_json(*checkpoint.rc) : json(nullptr);
  payload["ee"] = checkpoint.ee ? model_to_json(*checkpoint.ee) : json(nullptr);
  const std::string body = payload.dump();
  json file{{"format", kFormat}, {"version", kCheckpointVersion}, {"payload_checksum", fnv1a_hex(body)},
            {"payload", std::move(payload)}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out << file.dump() << '\n';
  if (!out) throw CheckpointError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const RelationCatalog* expected_catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    const json file = json::parse(buf.str());
    if (file.at("format").get<std::string>() != kFormat) throw CheckpointError("not a checkpoint file");
    const int version = file.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    const auto& payload = file.at("payload");
    if (fnv1a_hex(payload.dump()) != file.at("payload_checksum").get<std::string>())
      throw CheckpointError("checkpoint payload checksum mismatch");

    Checkpoint out;
    out.catalog = catalog_from_json(payload.at("catalog"));
    if (out.catalog.fingerprint() != payload.at("catalog_fingerprint").get<std::uint64_t>())
      throw CheckpointError("catalog fingerprint mismatch");
    if (expected_catalog && out.catalog.fingerprint() != expected_catalog->fingerprint())
      throw CheckpointError("checkpoint was trained on a different relation catalog");
    out.config_json = payload.at("config").dump();
    if (!payload.at("rc").is_null()) out.rc = model_from_json<RelationClassifier>(payload.at("rc"), out.catalog);
    if (!payload.at("ee").is_null()) out.ee = model_from_json<EntityExtractor>(payload.at("ee"), out.catalog);
    if (!out.rc && !out.ee) throw CheckpointError("checkpoint holds no model");
    return out;
  } catch (const CheckpointError&) {
    throw;
  } catch (const json::exception& e) {
    throw CheckpointError("malformed checkpoint " + path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw CheckpointError("invalid checkpoint " + path.string() + ": " + e.what());
  }
}

Checkpoint merge_checkpoints(Checkpoint rc_part, Checkpoint ee_part) {
  if (!(rc_part.catalog == ee_part.catalog)) throw CatalogError("checkpoints were trained on different catalogs");
  if (!rc_part.rc) throw CheckpointError("first checkpoint holds no relation classifier");
  if (!ee_part.ee) throw CheckpointError("second checkpoint holds no entity extractor");
  Checkpoint out;
  out.catalog = std::move(rc_part.catalog);
  out.rc = std::move(rc_part.rc);
  out.ee = std::move(ee_part.ee);
  out.config_json = json{{"rc", json::parse(rc_part.config_json)}, {"ee", json::parse(ee_part.config_json)}}.dump();
  return out;
}

}  // namespace rere
