#ifndef RERE_EVALKIT_HPP
#define RERE_EVALKIT_HPP

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rere/datamodel.hpp"
#include "rere/pu_loss.hpp"

namespace rere::eval {

// kExact: relation and both full spans equal. kPartial: relation equal and
// the last token of subject and object equal (NYT labels only last words).
enum class MatchMode { kPartial, kExact };

MatchMode parse_match_mode(std::string_view text);  // "partial" | "exact"
std::string_view to_string(MatchMode mode);

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Counts counts;

  static MetricsReport from_counts(const Counts& c);
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Counts for one sentence. Duplicate predictions are removed first; under
// partial match each prediction may consume at most one gold triple.
Counts match_sentence(std::span<const Triple> predicted, std::span<const Triple> gold, MatchMode mode);

// Micro-aggregated metrics. Predictions must align with gold sentence by
// sentence (same count, same tokens) or AlignmentError is thrown; prediction
// relations are mapped into the gold catalog by name (CatalogError if absent).
MetricsReport score(const PredictionSet& predictions, const Dataset& gold, MatchMode mode);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Threshold 0 followed by `steps` evenly spaced quantiles of the observed
// scores (duplicates collapsed). Each point keeps predictions with score >=
// threshold.
std::vector<PrPoint> pr_curve(const PredictionSet& predictions, const Dataset& gold, MatchMode mode, std::size_t steps);

void write_pr_csv(std::span<const PrPoint> curve, std::ostream& out);
std::string metrics_json(const MetricsReport& report, int indent = 2);

struct FnVariant {
  double fn_rate = 0.0;
  Dataset train;
};

// Trains on one training variant with one loss and returns predictions on
// the test set.
using SweepTrainer = std::function<PredictionSet(const Dataset& train, pu::LossKind loss)>;

struct RobustnessRow {
  double fn_rate = 0.0;
  pu::LossKind loss = pu::LossKind::kCollectivePu;
  MetricsReport metrics;
  double delta_f1 = 0.0;  // F1 at rate 0 minus F1 at this rate, same loss
};

struct RobustnessReport {
  std::vector<RobustnessRow> rows;

  const RobustnessRow& at(double fn_rate, pu::LossKind loss) const;
};

// Every (variant, loss) combination, in variant-major order. One variant
// must have fn_rate 0 (ConfigError otherwise).
RobustnessReport robustness_sweep(std::span<const FnVariant> variants, const Dataset& test, const SweepTrainer& trainer,
                                  std::span<const pu::LossKind> losses, MatchMode mode);

void write_robustness_csv(const RobustnessReport& report, std::ostream& out);
std::string robustness_json(const RobustnessReport& report, int indent = 2);

}  // namespace rere::eval

#endif  // RERE_EVALKIT_HPP
