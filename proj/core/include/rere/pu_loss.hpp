#ifndef RERE_PU_LOSS_HPP
#define RERE_PU_LOSS_HPP

#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "rere/datamodel.hpp"

namespace rere::pu {

enum class LossKind { kCollectivePu, kBce };

LossKind parse_loss_kind(std::string_view text);  // "cpu" | "bce"; ConfigError otherwise
std::string_view to_string(LossKind kind);

enum class Task { kRelation, kEntity };

// Per-task settings of the collective PU loss. mu = pi * (tau + 1), clamped
// below 1. pi = 0 is accepted and yields the intolerant mu = 0 objective.
struct PuLossConfig {
  double pi = 0.0;
  double tau = 0.0;
  double gamma = 0.5;
  double epsilon = 1e-7;

  double mu() const;
  void validate() const;  // ConfigError
};

// Correctness of a set mean against its label: the mean itself for the
// positive set, 1 - |mean - mu| for the negative set.
double correctness(double mean_score, int label, double mu);

// Collective PU loss over one relation-score vector. Indices are split by
// label; each non-empty side contributes its branch evaluated at the side's
// mean score. Log arguments are clamped to [epsilon, 1].
double loss_rc(std::span<const double> scores, std::span<const double> labels, const PuLossConfig& config);
// d loss_rc / d scores, zero wherever a clamp is active.
Eigen::VectorXd loss_rc_grad(std::span<const double> scores, std::span<const double> labels, const PuLossConfig& config);

// Collective PU loss over an N x 4 pointer grid: the loss_rc rule applied to
// each column independently and summed.
double loss_ee(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& labels, const PuLossConfig& config);
Eigen::MatrixXd loss_ee_grad(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& labels, const PuLossConfig& config);

// Element-wise binary cross-entropy, mean-reduced; positive targets weighted
// by positive_weight. Scores are clamped to [epsilon, 1 - epsilon].
double bce_baseline(std::span<const double> scores, std::span<const double> labels, double positive_weight = 1.0,
                    double epsilon = 1e-12);
Eigen::VectorXd bce_baseline_grad(std::span<const double> scores, std::span<const double> labels,
                                  double positive_weight = 1.0, double epsilon = 1e-12);

// Empirical class prior. kRelation: mean over instances of distinct gold
// relations / |R|. kEntity: mean over (instance, gold relation) of pointer
// ones / (4 N). Throws EmptyInput when nothing can be averaged.
double estimate_prior(const Dataset& dataset, Task task);

}  // namespace rere::pu

#endif  // RERE_PU_LOSS_HPP
