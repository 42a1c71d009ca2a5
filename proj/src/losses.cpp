#include "xmr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "xmr/dhb.hpp"

namespace xmr {

double gmm_nll(const GmmParams& params, const DifferentialPosed& target) {
  if (params.modes.empty()) throw std::invalid_argument("gmm_nll: mixture has no modes");
  const Vector6d x = target.vector();
  const double log_norm = 3.0 * std::log(2.0 * std::numbers::pi);

  std::vector<double> logits;
  std::vector<double> joint;  // log weight-free density of each mode
  logits.reserve(params.modes.size());
  joint.reserve(params.modes.size());
  for (const auto& mode : params.modes) {
    if (!std::isfinite(mode.logit) || !mode.mean.allFinite() || !mode.std.allFinite()) {
      throw std::invalid_argument("gmm_nll: non-finite mode parameters");
    }
    const Vector6d sigma = mode.std.cwiseMax(kGmmStdFloor);
    const Vector6d z = (x - mode.mean).cwiseQuotient(sigma);
    logits.push_back(mode.logit);
    joint.push_back(-0.5 * z.squaredNorm() - sigma.array().log().sum() - log_norm);
  }

  const auto log_sum_exp = [](const std::vector<double>& v) {
    const double peak = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(peak)) return peak;
    double sum = 0.0;
    for (const double e : v) sum += std::exp(e - peak);
    return peak + std::log(sum);
  };
  for (std::size_t k = 0; k < joint.size(); ++k) joint[k] += logits[k];
  return log_sum_exp(logits) - log_sum_exp(joint);
}

double invariant_loss_sequence(std::span<const Posed> history, std::span<const DifferentialPosed> predicted,
                               std::span<const DifferentialPosed> demo) {
  if (predicted.size() != demo.size()) {
    throw std::invalid_argument("invariant_loss_sequence: predicted and demo lengths differ");
  }
  if (predicted.empty()) throw std::invalid_argument("invariant_loss_sequence: need at least one step");
  if (history.size() < 3) throw std::invalid_argument("invariant_loss_sequence: history needs at least 3 poses");
  const auto a = extend_window<double>(history, predicted);
  const auto b = extend_window<double>(history, demo);
  return dhb_distance(dhb_transform<double>(a), dhb_transform<double>(b));
}

double invariant_loss_step(std::span<const Posed> history, const DifferentialPosed& predicted,
                           const DifferentialPosed& demo) {
  return invariant_loss_sequence(history, std::span<const DifferentialPosed>(&predicted, 1),
                                 std::span<const DifferentialPosed>(&demo, 1));
}

double grasp_ce(double logit, bool label) {
  const double y = label ? 1.0 : 0.0;
  return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
}

LossBreakdown total_loss(const GmmParams& params, std::span<const Posed> history,
                         std::span<const DifferentialPosed> predicted, std::span<const DifferentialPosed> demo,
                         double grasp_logit, bool grasp_label, const LossWeights& weights) {
  const double invar = invariant_loss_sequence(history, predicted, demo);
  LossBreakdown out;
  out.nll = weights.nll * gmm_nll(params, demo.front());
  out.invar = weights.invar * invar;
  out.ce = weights.ce * grasp_ce(grasp_logit, grasp_label);
  out.total = out.nll + out.invar + out.ce;
  return out;
}

LossBreakdown total_loss(const GmmParams& params, std::span<const Posed> history, const DifferentialPosed& predicted,
                         const DifferentialPosed& demo, double grasp_logit, bool grasp_label,
                         const LossWeights& weights) {
  return total_loss(params, history, std::span<const DifferentialPosed>(&predicted, 1),
                    std::span<const DifferentialPosed>(&demo, 1), grasp_logit, grasp_label, weights);
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

Eigen::Vector3d invariant_loss_gradient(std::span<const Posed> history, const DifferentialPosed& predicted,
                                        const DifferentialPosed& demo, double h) {
  const auto f = [&](const Eigen::VectorXd& dt) {
    return invariant_loss_step(history, DifferentialPosed{dt, predicted.drotation}, demo);
  };
  return central_difference(f, predicted.dtranslation, h);
}

}  // namespace xmr
