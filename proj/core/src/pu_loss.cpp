#include "rere/pu_loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rere/errors.hpp"
#include "rere/labels.hpp"

namespace rere::pu {

LossKind parse_loss_kind(std::string_view text) {
  if (text == "cpu") return LossKind::kCollectivePu;
  if (text == "bce") return LossKind::kBce;
  throw ConfigError("loss.kind must be 'cpu' or 'bce', got '" + std::string(text) + "'");
}

std::string_view to_string(LossKind kind) { return kind == LossKind::kCollectivePu ? "cpu" : "bce"; }

double PuLossConfig::mu() const {
  const double raw = pi * (tau + 1.0);
  return std::clamp(raw, 0.0, std::nextafter(1.0, 0.0));
}

void PuLossConfig::validate() const {
  if (!(pi >= 0.0 && pi < 1.0)) throw ConfigError("pu.pi must lie in [0,1), got " + std::to_string(pi));
  if (!(tau >= 0.0 && tau < 1.0)) throw ConfigError("pu.tau must lie in [0,1), got " + std::to_string(tau));
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("pu.gamma must lie in (0,1), got " + std::to_string(gamma));
  if (!(epsilon > 0.0)) throw ConfigError("pu.epsilon must be positive");
}

double correctness(double mean_score, int label, double mu) {
  return label == 1 ? mean_score : 1.0 - std::abs(mean_score - mu);
}

namespace {

struct SideMeans {
  double pos_sum = 0.0, neg_sum = 0.0;
  std::size_t pos = 0, neg = 0;
};

// Collective loss of one score vector (a strided view so grid columns work
// without copies) and, if `grad` is non-null, its gradient.
template <typename Scores, typename Labels, typename Grad>
double collective(const Scores& s, const Labels& y, const PuLossConfig& cfg, Grad* grad) {
  SideMeans m;
  const auto n = s.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] > 0.5) {
      m.pos_sum += s[i];
      ++m.pos;
    } else {
      m.neg_sum += s[i];
      ++m.neg;
    }
  }
  const double mu = cfg.mu();
  double loss = 0.0;
  double d_pos = 0.0, d_neg = 0.0;  // d loss / d score for each member of a side
  if (m.pos > 0) {
    const double mean = m.pos_sum / static_cast<double>(m.pos);
    const double arg = std::min(mean, 1.0);
    if (arg < cfg.epsilon) {
      loss += -cfg.gamma * std::log(cfg.epsilon);
    } else {
      loss += -cfg.gamma * std::log(arg);
      if (mean <= 1.0) d_pos = -cfg.gamma / (arg * static_cast<double>(m.pos));
    }
  }
  if (m.neg > 0) {
    const double mean = m.neg_sum / static_cast<double>(m.neg);
    const double diff = mean - mu;
    const double arg = 1.0 - std::abs(diff);
    if (arg < cfg.epsilon) {
      loss += -std::log(cfg.epsilon);
    } else {
      loss += -std::log(std::min(arg, 1.0));
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      d_neg = sign / (arg * static_cast<double>(m.neg));
    }
  }
  if (grad) {
    for (Eigen::Index i = 0; i < n; ++i) (*grad)[i] = y[i] > 0.5 ? d_pos : d_neg;
  }
  return loss;
}

void check_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw ShapeError("scores and labels differ in length (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  if (a == 0) throw ShapeError("empty score vector");
}

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("score grid " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs label grid " +
                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  if (a.cols() != 4) throw ShapeError("pointer grids must have 4 columns");
  if (a.rows() == 0) throw ShapeError("empty pointer grid");
}

using ConstMap = Eigen::Map<const Eigen::VectorXd>;

ConstMap as_vector(std::span<const double> v) { return ConstMap(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

double loss_rc(std::span<const double> scores, std::span<const double> labels, const PuLossConfig& config) {
  check_same_length(scores.size(), labels.size());
  return collective(as_vector(scores), as_vector(labels), config, static_cast<Eigen::VectorXd*>(nullptr));
}

Eigen::VectorXd loss_rc_grad(std::span<const double> scores, std::span<const double> labels, const PuLossConfig& config) {
  check_same_length(scores.size(), labels.size());
  Eigen::VectorXd g(static_cast<Eigen::Index>(scores.size()));
  collective(as_vector(scores), as_vector(labels), config, &g);
  return g;
}

double loss_ee(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& labels, const PuLossConfig& config) {
  check_same_shape(scores, labels);
  double total = 0.0;
  for (Eigen::Index k = 0; k < 4; ++k)
    total += collective(scores.col(k), labels.col(k), config, static_cast<Eigen::VectorXd*>(nullptr));
  return total;
}

Eigen::MatrixXd loss_ee_grad(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& labels, const PuLossConfig& config) {
  check_same_shape(scores, labels);
  Eigen::MatrixXd g(scores.rows(), 4);
  for (Eigen::Index k = 0; k < 4; ++k) {
    Eigen::VectorXd col(scores.rows());
    collective(scores.col(k), labels.col(k), config, &col);
    g.col(k) = col;
  }
  return g;
}

double bce_baseline(std::span<const double> scores, std::span<const double> labels, double positive_weight,
                    double epsilon) {
  check_same_length(scores.size(), labels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = std::clamp(scores[i], epsilon, 1.0 - epsilon);
    total += labels[i] > 0.5 ? -positive_weight * std::log(s) : -std::log(1.0 - s);
  }
  return total / static_cast<double>(scores.size());
}

Eigen::VectorXd bce_baseline_grad(std::span<const double> scores, std::span<const double> labels,
                                  double positive_weight, double epsilon) {
  check_same_length(scores.size(), labels.size());
  const double n = static_cast<double>(scores.size());
  Eigen::VectorXd g(static_cast<Eigen::Index>(scores.size()));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double raw = scores[i];
    const auto k = static_cast<Eigen::Index>(i);
    if (raw < epsilon || raw > 1.0 - epsilon) {
      g(k) = 0.0;
    } else {
      g(k) = (labels[i] > 0.5 ? -positive_weight / raw : 1.0 / (1.0 - raw)) / n;
    }
  }
  return g;
}

double estimate_prior(const Dataset& dataset, Task task) {
  if (dataset.empty()) throw EmptyInput("cannot estimate a class prior from an empty dataset");
  if (task == Task::kRelation) {
    if (dataset.catalog.empty()) throw EmptyInput("cannot estimate a relation prior with an empty catalog");
    const double r = static_cast<double>(dataset.catalog.size());
    double sum = 0.0;
    for (const auto& inst : dataset.instances) sum += static_cast<double>(inst.relations().size()) / r;
    return sum / static_cast<double>(dataset.size());
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (const auto& inst : dataset.instances) {
    const double cells = 4.0 * static_cast<double>(inst.length());
    for (RelationId rel : inst.relations()) {
      sum += ee_label_grid(inst, rel).sum() / cells;
      ++pairs;
    }
  }
  if (pairs == 0) throw EmptyInput("no (instance, gold relation) pairs to estimate the entity prior from");
  return sum / static_cast<double>(pairs);
}

}  // namespace rere::pu
