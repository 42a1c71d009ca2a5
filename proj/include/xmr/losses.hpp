#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "xmr/se3.hpp"

namespace xmr {

inline constexpr int kDefaultGmmModes = 5;
inline constexpr std::size_t kDefaultHistoryLength = 10;
inline constexpr double kGmmStdFloor = 1e-4;

/// Mixture over 6-D differential poses (dtranslation, drotation) with
/// diagonal covariances. Standard deviations below kGmmStdFloor are raised to
/// it when the density is evaluated.
struct GmmParams {
  struct Mode {
    double logit = 0.0;
    Vector6d mean = Vector6d::Zero();
    Vector6d std = Vector6d::Ones();
  };
  std::vector<Mode> modes;
};

struct LossWeights {
  double nll = 1.0;
  double invar = 1.0;
  double ce = 1.0;
};

/// Weighted components; total is their plain sum.
struct LossBreakdown {
  double nll = 0.0;
  double invar = 0.0;
  double ce = 0.0;
  double total = 0.0;
};

/// -log sum_k softmax(logit)_k N(target; mean_k, diag std_k^2), evaluated with
/// log-sum-exp. Throws std::invalid_argument for an empty mixture or
/// non-finite parameters.
double gmm_nll(const GmmParams& params, const DifferentialPosed& target);

/// dhb_distance between the history extended by each step sequence. Both
/// sequences have the same length P + 1 >= 1; the history has at least 3 poses.
double invariant_loss_sequence(std::span<const Posed> history, std::span<const DifferentialPosed> predicted,
                               std::span<const DifferentialPosed> demo);

/// The one-step case of invariant_loss_sequence.
double invariant_loss_step(std::span<const Posed> history, const DifferentialPosed& predicted,
                           const DifferentialPosed& demo);

/// Binary cross-entropy with logits: max(z, 0) - z y + log(1 + exp(-|z|)).
double grasp_ce(double logit, bool label);

LossBreakdown total_loss(const GmmParams& params, std::span<const Posed> history, const DifferentialPosed& predicted,
                         const DifferentialPosed& demo, double grasp_logit, bool grasp_label,
                         const LossWeights& weights = {});

/// Receding-horizon variant: the invariant term compares whole step sequences
/// and the likelihood scores the first demonstrated step.
LossBreakdown total_loss(const GmmParams& params, std::span<const Posed> history,
                         std::span<const DifferentialPosed> predicted, std::span<const DifferentialPosed> demo,
                         double grasp_logit, bool grasp_label, const LossWeights& weights = {});

/// Central-difference gradient of f at x with step h in every coordinate.
Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h);

/// Gradient of invariant_loss_step with respect to the predicted translation
/// step, by central differences.
Eigen::Vector3d invariant_loss_gradient(std::span<const Posed> history, const DifferentialPosed& predicted,
                                        const DifferentialPosed& demo, double h = 1e-6);

}  // namespace xmr
