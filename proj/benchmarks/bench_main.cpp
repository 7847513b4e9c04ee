#include <benchmark/benchmark.h>

#include <vector>

#include "rere/entity_extractor.hpp"
#include "rere/nn.hpp"
#include "rere/pipeline.hpp"
#include "rere/pu_loss.hpp"
#include "rere/synthetic.hpp"

using namespace rere;

namespace {

Eigen::MatrixXd random_grid(Eigen::Index n, double density, std::uint64_t seed) {
  nn::Rng rng(seed);
  Eigen::MatrixXd g(n, 4);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.bernoulli(density) ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.5);
  return g;
}

const synthetic::Corpus& corpus() {
  static const auto c = synthetic::generate({.train = 500, .dev = 0, .test = 50, .seed = 7});
  return c;
}

TrainConfig bench_config(Stage stage, int d) {
  TrainConfig c;
  c.stage = stage;
  c.encoder.embedding_dim = d;
  c.encoder.hidden_dim = d;
  c.pi = 0.0;
  return c;
}

void BM_DecodeSpans(benchmark::State& state) {
  const auto grid = random_grid(state.range(0), 0.1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(decode_spans(grid, 0.5));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DecodeSpans)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_LossEeWithGrad(benchmark::State& state) {
  const auto n = state.range(0);
  const Eigen::MatrixXd scores = random_grid(n, 0.1, 2);
  Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(n, 4);
  labels.row(n / 3).setOnes();
  const pu::PuLossConfig cfg{.pi = 0.02, .tau = 0.5, .gamma = 0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(pu::loss_ee(scores, labels, cfg));
    benchmark::DoNotOptimize(pu::loss_ee_grad(scores, labels, cfg));
  }
}
BENCHMARK(BM_LossEeWithGrad)->Arg(32)->Arg(128);

void BM_ScoreRelations(benchmark::State& state) {
  const auto rc = make_relation_classifier(corpus().train, bench_config(Stage::kRc, static_cast<int>(state.range(0))));
  const auto& sentence = corpus().test.instances.front().tokens;
  for (auto _ : state) benchmark::DoNotOptimize(rc.score_relations(sentence));
}
BENCHMARK(BM_ScoreRelations)->Arg(32)->Arg(64);

void BM_ScorePointers(benchmark::State& state) {
  const auto ee = make_entity_extractor(corpus().train, bench_config(Stage::kEe, static_cast<int>(state.range(0))));
  const auto& sentence = corpus().test.instances.front().tokens;
  for (auto _ : state) benchmark::DoNotOptimize(ee.score_pointers(RelationId(0), sentence));
}
BENCHMARK(BM_ScorePointers)->Arg(32)->Arg(64);

void BM_TrainStepRc(benchmark::State& state) {
  auto rc = make_relation_classifier(corpus().train, bench_config(Stage::kRc, 32));
  RcTrainer trainer(rc, bench_config(Stage::kRc, 32), 0.0);
  const std::span<const LabeledInstance> batch(corpus().train.instances.data(), 32);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(batch));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStepRc)->Unit(benchmark::kMillisecond);

void BM_PredictCorpus(benchmark::State& state) {
  const auto rc = make_relation_classifier(corpus().train, bench_config(Stage::kRc, 32));
  const auto ee = make_entity_extractor(corpus().train, bench_config(Stage::kEe, 32));
  for (auto _ : state) benchmark::DoNotOptimize(predict_corpus(corpus().test, rc, ee));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(corpus().test.size()));
}
BENCHMARK(BM_PredictCorpus)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
