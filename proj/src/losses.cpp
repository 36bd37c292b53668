#include "laq/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace laq {

namespace {

constexpr double kEps = 1e-7;

void require_same(const GridInfo& a, const GridInfo& b, const char* who) {
  if (!a.same_geometry(b)) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

}  // namespace

LambdaSet lambda_schedule(const LambdaSet& base, long iteration, long every, double factor) {
  if (iteration < 0) throw std::invalid_argument("lambda_schedule: negative iteration");
  if (every < 1) throw std::invalid_argument("lambda_schedule: period must be >= 1");
  const double scale = std::pow(factor, static_cast<double>(iteration / every));
  LambdaSet out = base;
  out.la = base.la * scale;
  out.m2 = base.m2 * scale;
  return out;
}

double clamp_probability(double p) {
  if (p < kEps) return kEps;
  if (p > 1.0 - kEps) return 1.0 - kEps;
  return p;
}

LossValue bce_loss(const Volume& pred, const LabelMask& target) {
  require_same(pred.grid(), target.grid(), "bce_loss");

  LossValue out;
  out.grad = Volume(pred.grid());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = clamp_probability(pred[i]);
    const double y = target[i] ? 1.0 : 0.0;
    sum -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    out.grad[i] = -(y / p - (1.0 - y) / (1.0 - p));
  }
  out.value = sum;
  return out;
}

LossValue se_loss_la(const Volume& pred, const DistanceField& phi) {
  require_same(pred.grid(), phi.grid(), "se_loss_la");

  LossValue out;
  out.grad = phi;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - 0.5) * phi[i];
  out.value = sum;
  return out;
}

PairLossValue se_loss_scar(const ProbabilityPair& pred, const ProbabilityPair& target) {
  require_same(pred.p_normal.grid(), pred.p_scar.grid(), "se_loss_scar");
  require_same(pred.p_normal.grid(), target.p_normal.grid(), "se_loss_scar");
  require_same(pred.p_normal.grid(), target.p_scar.grid(), "se_loss_scar");

  PairLossValue out;
  out.grad_normal = Volume(pred.p_normal.grid());
  out.grad_scar = Volume(pred.p_scar.grid());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.p_normal.size(); ++i) {
    const double dn = pred.p_normal[i] - target.p_normal[i];
    const double ds = pred.p_scar[i] - target.p_scar[i];
    sum += dn * dn + ds * ds;
    out.grad_normal[i] = 2.0 * dn;
    out.grad_scar[i] = 2.0 * ds;
  }
  out.value = sum;
  return out;
}

PairLossValue sa_loss(const ProbabilityPair& pred, const ProbabilityPair& target,
                      const LabelMask& mask) {
  require_same(pred.p_normal.grid(), pred.p_scar.grid(), "sa_loss");
  require_same(pred.p_normal.grid(), target.p_normal.grid(), "sa_loss");
  require_same(pred.p_normal.grid(), target.p_scar.grid(), "sa_loss");
  require_same(pred.p_normal.grid(), mask.grid(), "sa_loss");

  PairLossValue out;
  out.grad_normal = Volume(pred.p_normal.grid());
  out.grad_scar = Volume(pred.p_scar.grid());
  double sum = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double dp_hat = pred.p_normal[i] - pred.p_scar[i];
    const double dp = target.p_normal[i] - target.p_scar[i];
    const double r = dp_hat - dp;
    sum += r * r;
    out.grad_normal[i] = 2.0 * r;
    out.grad_scar[i] = -2.0 * r;
  }
  out.value = sum;
  return out;
}

TotalLoss total_loss(const Volume& y_pred, const LabelMask& y_gold, const DistanceField& phi,
                     const ProbabilityPair& p_pred, const ProbabilityPair& p_target,
                     const LabelMask& m1, const LabelMask* m2, const LambdaSet& lambda) {
  const LossValue bce = bce_loss(y_pred, y_gold);
  const LossValue se_la = se_loss_la(y_pred, phi);
  const PairLossValue se_scar = se_loss_scar(p_pred, p_target);
  const PairLossValue sa1 = sa_loss(p_pred, p_target, m1);

  TotalLoss out;
  out.bce = bce.value;
  out.se_la = se_la.value;
  out.se_scar = se_scar.value;
  out.sa_m1 = sa1.value;

  out.grad_la = Volume(y_pred.grid());
  for (std::size_t i = 0; i < out.grad_la.size(); ++i)
    out.grad_la[i] = bce.grad[i] + lambda.la * se_la.grad[i];

  out.grad_normal = Volume(p_pred.p_normal.grid());
  out.grad_scar = Volume(p_pred.p_scar.grid());
  for (std::size_t i = 0; i < out.grad_normal.size(); ++i) {
    out.grad_normal[i] = lambda.scar * se_scar.grad_normal[i] + lambda.m1 * sa1.grad_normal[i];
    out.grad_scar[i] = lambda.scar * se_scar.grad_scar[i] + lambda.m1 * sa1.grad_scar[i];
  }

  if (m2 != nullptr) {
    const PairLossValue sa2 = sa_loss(p_pred, p_target, *m2);
    out.sa_m2 = sa2.value;
    for (std::size_t i = 0; i < out.grad_normal.size(); ++i) {
      out.grad_normal[i] += lambda.m2 * sa2.grad_normal[i];
      out.grad_scar[i] += lambda.m2 * sa2.grad_scar[i];
    }
  }

  out.value = out.bce + lambda.la * out.se_la + lambda.scar * out.se_scar + lambda.m1 * out.sa_m1 +
              lambda.m2 * out.sa_m2;
  return out;
}

LossValue soft_dice_loss(const Volume& pred, const LabelMask& target) {
  require_same(pred.grid(), target.grid(), "soft_dice_loss");

  double inter = 0.0, denom = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double g = target[i] ? 1.0 : 0.0;
    inter += pred[i] * g;
    denom += pred[i] * pred[i] + g;
  }
  if (denom <= 0.0) throw std::invalid_argument("soft_dice_loss: degenerate denominator");

  LossValue out;
  out.value = 1.0 - 2.0 * inter / denom;
  out.grad = Volume(pred.grid());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double g = target[i] ? 1.0 : 0.0;
    out.grad[i] = -2.0 * (g * denom - inter * 2.0 * pred[i]) / (denom * denom);
  }
  return out;
}

}  // namespace laq
