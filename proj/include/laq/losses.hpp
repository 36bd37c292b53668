#ifndef LAQ_LOSSES_HPP
#define LAQ_LOSSES_HPP

#include "laq/volume.hpp"

namespace laq {

// Loss value with the analytic gradient with respect to a single prediction
// field.
struct LossValue {
  double value = 0.0;
  Volume grad;
};

// Loss value with gradients for both channels of a ProbabilityPair prediction.
struct PairLossValue {
  double value = 0.0;
  Volume grad_normal;
  Volume grad_scar;
};

// Balancing weights of the composite objective.
struct LambdaSet {
  double la = 0.01;
  double scar = 10.0;
  double m1 = 0.01;
  double m2 = 0.001;
};

// la and m2 grow by the given factor every `every` iterations; scar and m1
// stay fixed.
LambdaSet lambda_schedule(const LambdaSet& base, long iteration, long every = 200,
                          double factor = 1.1);

// Predictions are clamped into [1e-7, 1-1e-7] before logarithms.
double clamp_probability(double p);

// Binary cross entropy, summed (not averaged) over voxels.
// value = -sum_i [y log yhat + (1-y) log(1-yhat)], grad_i evaluated at the
// clamped prediction.
LossValue bce_loss(const Volume& pred, const LabelMask& target);

// Spatial-encoding term for the cavity head: sum_i (yhat_i - 0.5) * phi_i.
// Linear in the prediction; grad = phi.
LossValue se_loss_la(const Volume& pred, const DistanceField& phi);

// Squared-error regression onto distance-probability targets, both channels:
// sum_i sum_c (phat_c - p_c)^2.
PairLossValue se_loss_scar(const ProbabilityPair& pred, const ProbabilityPair& target);

// Shape-attention term on the probability difference dp = p_normal - p_scar,
// restricted to a binary mask: sum_i (M_i * (dphat_i - dp_i))^2.
PairLossValue sa_loss(const ProbabilityPair& pred, const ProbabilityPair& target,
                      const LabelMask& mask);

// Composite objective with per-head gradient accumulation. Component values
// are stored unweighted; `value` applies the lambda weights. A null m2 drops
// that term (used when the predicted cavity has no valid boundary).
struct TotalLoss {
  double value = 0.0;
  double bce = 0.0;
  double se_la = 0.0;
  double se_scar = 0.0;
  double sa_m1 = 0.0;
  double sa_m2 = 0.0;
  Volume grad_la;
  Volume grad_normal;
  Volume grad_scar;
};

TotalLoss total_loss(const Volume& y_pred, const LabelMask& y_gold, const DistanceField& phi,
                     const ProbabilityPair& p_pred, const ProbabilityPair& p_target,
                     const LabelMask& m1, const LabelMask* m2, const LambdaSet& lambda);

// Soft Dice loss 1 - 2*sum(p*g) / (sum(p^2) + sum(g^2)), used only as a
// baseline training objective.
LossValue soft_dice_loss(const Volume& pred, const LabelMask& target);

}  // namespace laq

#endif
