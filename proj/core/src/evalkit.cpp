#include "rere/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <tuple>

#include <json.hpp>

#include "rere/errors.hpp"

namespace rere::eval {

using json = nlohmann::json;

MatchMode parse_match_mode(std::string_view text) {
  if (text == "partial") return MatchMode::kPartial;
  if (text == "exact") return MatchMode::kExact;
  throw ConfigError("match mode must be 'partial' or 'exact', got '" + std::string(text) + "'");
}

std::string_view to_string(MatchMode mode) { return mode == MatchMode::kPartial ? "partial" : "exact"; }

MetricsReport MetricsReport::from_counts(const Counts& c) {
  MetricsReport r;
  r.counts = c;
  r.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  r.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  r.f1 = r.precision + r.recall == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

namespace {

std::vector<Triple> unique_sorted(std::span<const Triple> triples) {
  std::vector<Triple> v(triples.begin(), triples.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

using PartialKey = std::tuple<std::uint32_t, std::size_t, std::size_t>;

PartialKey partial_key(const Triple& t) { return {t.relation.value, t.subject.end, t.object.end}; }

}  // namespace

Counts match_sentence(std::span<const Triple> predicted, std::span<const Triple> gold, MatchMode mode) {
  const auto p = unique_sorted(predicted);
  const auto g = unique_sorted(gold);
  std::size_t tp = 0;
  if (mode == MatchMode::kExact) {
    std::vector<Triple> common;
    std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(common));
    tp = common.size();
  } else {
    std::map<PartialKey, std::pair<std::size_t, std::size_t>> buckets;
    for (const auto& t : p) ++buckets[partial_key(t)].first;
    for (const auto& t : g) ++buckets[partial_key(t)].second;
    for (const auto& [key, counts] : buckets) tp += std::min(counts.first, counts.second);
  }
  return {tp, p.size() - tp, g.size() - tp};
}

namespace {

// Relation ids of the prediction catalog expressed in the gold catalog.
std::vector<RelationId> relation_mapping(const RelationCatalog& from, const RelationCatalog& to) {
  std::vector<RelationId> map;
  map.reserve(from.size());
  for (const auto& e : from.entries()) {
    auto id = to.find(e.name);
    if (!id) throw CatalogError("predicted relation '" + e.name + "' is not in the gold catalog");
    map.push_back(*id);
  }
  return map;
}

void check_alignment(const PredictionSet& predictions, const Dataset& gold) {
  if (predictions.size() != gold.size())
    throw AlignmentError("prediction set has " + std::to_string(predictions.size()) + " sentences, gold has " +
                         std::to_string(gold.size()));
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (predictions.instances[i].tokens != gold.instances[i].tokens)
      throw AlignmentError("sentence " + std::to_string(i) + " differs between predictions and gold");
}

Counts count_at(const PredictionSet& predictions, const Dataset& gold, const std::vector<RelationId>& map,
                MatchMode mode, double threshold) {
  Counts total;
  std::vector<Triple> kept;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    kept.clear();
    for (const auto& st : predictions.instances[i].triples) {
      if (st.score < threshold) continue;
      Triple t = st.triple;
      if (t.relation.index() >= map.size())
        throw CatalogError("predicted relation id " + std::to_string(t.relation.value) + " outside catalog");
      t.relation = map[t.relation.index()];
      kept.push_back(t);
    }
    total += match_sentence(kept, gold.instances[i].triples, mode);
  }
  return total;
}

}  // namespace

MetricsReport score(const PredictionSet& predictions, const Dataset& gold, MatchMode mode) {
  check_alignment(predictions, gold);
  const auto map = relation_mapping(predictions.catalog, gold.catalog);
  return MetricsReport::from_counts(count_at(predictions, gold, map, mode, -1.0));
}

std::vector<PrPoint> pr_curve(const PredictionSet& predictions, const Dataset& gold, MatchMode mode, std::size_t steps) {
  check_alignment(predictions, gold);
  const auto map = relation_mapping(predictions.catalog, gold.catalog);
  std::vector<double> scores;
  for (const auto& inst : predictions.instances)
    for (const auto& st : inst.triples) scores.push_back(st.score);
  std::sort(scores.begin(), scores.end());

  std::vector<double> thresholds{0.0};
  if (!scores.empty() && steps > 0) {
    const std::size_t last = scores.size() - 1;
    for (std::size_t i = 0; i < steps; ++i) {
      const std::size_t idx = steps == 1 ? 0 : (i * last) / (steps - 1);
      thresholds.push_back(scores[idx]);
    }
  }
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<PrPoint> curve;
  for (double t : thresholds) {
    const auto m = MetricsReport::from_counts(count_at(predictions, gold, map, mode, t));
    curve.push_back({t, m.precision, m.recall});
  }
  return curve;
}

void write_pr_csv(std::span<const PrPoint> curve, std::ostream& out) {
  out << "threshold,precision,recall\n";
  for (const auto& p : curve) out << json(p.threshold).dump() << ',' << json(p.precision).dump() << ',' << json(p.recall).dump() << '\n';
}

namespace {

json metrics_to_json(const MetricsReport& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
          {"tp", r.counts.tp},       {"fp", r.counts.fp},   {"fn", r.counts.fn}};
}

}  // namespace

std::string metrics_json(const MetricsReport& report, int indent) { return metrics_to_json(report).dump(indent); }

const RobustnessRow& RobustnessReport::at(double fn_rate, pu::LossKind loss) const {
  for (const auto& r : rows)
    if (r.fn_rate == fn_rate && r.loss == loss) return r;
  throw ConfigError("no robustness row for fn_rate " + std::to_string(fn_rate) + " and loss " +
                    std::string(pu::to_string(loss)));
}

RobustnessReport robustness_sweep(std::span<const FnVariant> variants, const Dataset& test, const SweepTrainer& trainer,
                                  std::span<const pu::LossKind> losses, MatchMode mode) {
  if (std::none_of(variants.begin(), variants.end(), [](const FnVariant& v) { return v.fn_rate == 0.0; }))
    throw ConfigError("robustness sweep needs a variant with fn_rate 0");
  RobustnessReport report;
  for (const auto& v : variants) {
    for (auto loss : losses) {
      RobustnessRow row;
      row.fn_rate = v.fn_rate;
      row.loss = loss;
      row.metrics = score(trainer(v.train, loss), test, mode);
      report.rows.push_back(row);
    }
  }
  for (auto& row : report.rows) row.delta_f1 = report.at(0.0, row.loss).metrics.f1 - row.metrics.f1;
  return report;
}

void write_robustness_csv(const RobustnessReport& report, std::ostream& out) {
  out << "fn_rate,loss,precision,recall,f1,delta_f1\n";
  for (const auto& r : report.rows)
    out << json(r.fn_rate).dump() << ',' << pu::to_string(r.loss) << ',' << json(r.metrics.precision).dump() << ','
        << json(r.metrics.recall).dump() << ',' << json(r.metrics.f1).dump() << ',' << json(r.delta_f1).dump() << '\n';
}

std::string robustness_json(const RobustnessReport& report, int indent) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json j = metrics_to_json(r.metrics);
    j["fn_rate"] = r.fn_rate;
    j["loss"] = std::string(pu::to_string(r.loss));
    j["delta_f1"] = r.delta_f1;
    rows.push_back(std::move(j));
  }
  return json{{"rows", rows}}.dump(indent);
}

}  // namespace rere::eval
