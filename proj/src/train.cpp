#include "laq/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "laq/distance.hpp"
#include "laq/rng.hpp"

namespace laq {

namespace {

LabelMask threshold_half(const Volume& v) {
  LabelMask m(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) m[i] = v[i] > 0.5 ? 1 : 0;
  return m;
}

LabelMask mask_difference(const LabelMask& a, const LabelMask& b) {
  LabelMask out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] != 0 && b[i] == 0) ? 1 : 0;
  return out;
}

}  // namespace

Objective parse_objective(const std::string& name) {
  if (name == "la_bce") return Objective::la_bce;
  if (name == "la_se") return Objective::la_se;
  if (name == "la_dice") return Objective::la_dice;
  if (name == "scar_bce") return Objective::scar_bce;
  if (name == "scar_se") return Objective::scar_se;
  if (name == "scar_dice") return Objective::scar_dice;
  if (name == "mtl_bce") return Objective::mtl_bce;
  if (name == "mtl_se") return Objective::mtl_se;
  if (name == "mtl_sesa") return Objective::mtl_sesa;
  throw std::invalid_argument("unknown objective: " + name);
}

std::string objective_name(Objective o) {
  switch (o) {
    case Objective::la_bce: return "la_bce";
    case Objective::la_se: return "la_se";
    case Objective::la_dice: return "la_dice";
    case Objective::scar_bce: return "scar_bce";
    case Objective::scar_se: return "scar_se";
    case Objective::scar_dice: return "scar_dice";
    case Objective::mtl_bce: return "mtl_bce";
    case Objective::mtl_se: return "mtl_se";
    case Objective::mtl_sesa: return "mtl_sesa";
  }
  throw std::logic_error("objective_name: bad enum");
}

bool trains_la(Objective o) {
  switch (o) {
    case Objective::la_bce:
    case Objective::la_se:
    case Objective::la_dice:
    case Objective::mtl_bce:
    case Objective::mtl_se:
    case Objective::mtl_sesa:
      return true;
    default:
      return false;
  }
}

bool trains_scar(Objective o) {
  switch (o) {
    case Objective::la_bce:
    case Objective::la_se:
    case Objective::la_dice:
      return false;
    default:
      return true;
  }
}

double learning_rate(const TrainConfig& cfg, long iteration) {
  if (iteration < 0) throw std::invalid_argument("learning_rate: negative iteration");
  if (cfg.lr_decay_every < 1) throw std::invalid_argument("learning_rate: decay interval < 1");
  return cfg.lr0 * std::pow(10.0, -static_cast<double>(iteration / cfg.lr_decay_every));
}

void sgd_step(Network& net, const std::vector<double>& grad, long iteration,
              const TrainConfig& cfg) {
  std::vector<double>& theta = net.params();
  std::vector<double>& mom = net.momentum();
  if (grad.size() != theta.size()) throw std::invalid_argument("sgd_step: gradient size mismatch");
  const double lr = learning_rate(cfg, iteration);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!std::isfinite(grad[i])) throw std::runtime_error("sgd_step: non-finite gradient");
    mom[i] = cfg.momentum * mom[i] + (grad[i] + cfg.weight_decay * theta[i]);
    theta[i] -= lr * mom[i];
  }
}

TrainCase prepare_case(const PhantomCase& pc, const std::string& id, double beta,
                       int attention_thickness) {
  TrainCase tc;
  tc.id = id;
  tc.image = zscore_normalize(pc.image);
  tc.la = pc.la;
  tc.wall = pc.wall;
  tc.scar = pc.scar;
  tc.normal_wall = mask_difference(pc.wall, pc.scar);
  tc.phi = signed_dtm(pc.la, beta);
  tc.targets = distance_probability_maps(pc.scar, pc.wall);
  tc.m1 = attention_mask(pc.la, attention_thickness);
  return tc;
}

std::string train_log_csv(const std::vector<TrainLogRow>& rows) {
  std::string out =
      "iteration,lr,lambda_la,lambda_scar,lambda_m1,lambda_m2,"
      "bce,se_la,se_scar,sa_m1,sa_m2,scar_bce,scar_dice,total\n";
  char buf[512];
  for (const TrainLogRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.iteration, r.lr, r.lambda.la, r.lambda.scar, r.lambda.m1, r.lambda.m2,
                  r.bce, r.se_la, r.se_scar, r.sa_m1, r.sa_m2, r.scar_bce, r.scar_dice, r.total);
    out += buf;
  }
  return out;
}

std::vector<TrainLogRow> train(Network& net, const std::vector<TrainCase>& cases,
                               const TrainConfig& cfg) {
  if (cases.empty()) throw std::invalid_argument("train: no cases");
  if (cfg.iterations < 0) throw std::invalid_argument("train: negative iteration count");

  const std::size_t n = cases.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(cfg.seed, 1));

  std::vector<TrainLogRow> log;
  log.reserve(static_cast<std::size_t>(cfg.iterations));

  for (long t = 0; t < cfg.iterations; ++t) {
    if (t % static_cast<long>(n) == 0) {
      for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(
            shuffle_rng.uniform_int(0, static_cast<long>(i) - 1));
        std::swap(order[i - 1], order[j]);
      }
    }
    const TrainCase& tc = cases[order[static_cast<std::size_t>(t) % n]];

    Network::Forward f = net.forward(tc.image);

    const LambdaSet lam = lambda_schedule(cfg.lambda, t, cfg.lambda_every, cfg.lambda_factor);

    TrainLogRow row;
    row.iteration = t;
    row.lr = learning_rate(cfg, t);
    row.lambda = lam;

    const GridInfo& g = tc.image.grid();
    Volume grad_y(g);
    Volume grad_pn(g);
    Volume grad_ps(g);

    switch (cfg.objective) {
      case Objective::la_bce: {
        LossValue b = bce_loss(f.y, tc.la);
        row.bce = b.value;
        row.total = b.value;
        grad_y = std::move(b.grad);
        break;
      }
      case Objective::la_se: {
        LossValue b = bce_loss(f.y, tc.la);
        LossValue s = se_loss_la(f.y, tc.phi);
        row.bce = b.value;
        row.se_la = s.value;
        row.total = b.value + lam.la * s.value;
        grad_y = std::move(b.grad);
        for (std::size_t i = 0; i < grad_y.size(); ++i) grad_y[i] += lam.la * s.grad[i];
        break;
      }
      case Objective::la_dice: {
        LossValue d = soft_dice_loss(f.y, tc.la);
        row.total = d.value;
        grad_y = std::move(d.grad);
        break;
      }
      case Objective::scar_bce: {
        LossValue bs = bce_loss(f.p.p_scar, tc.scar);
        LossValue bn = bce_loss(f.p.p_normal, tc.normal_wall);
        row.scar_bce = bs.value + bn.value;
        row.total = row.scar_bce;
        grad_ps = std::move(bs.grad);
        grad_pn = std::move(bn.grad);
        break;
      }
      case Objective::scar_se: {
        PairLossValue s = se_loss_scar(f.p, tc.targets);
        row.se_scar = s.value;
        row.total = lam.scar * s.value;
        grad_pn = std::move(s.grad_normal);
        grad_ps = std::move(s.grad_scar);
        for (std::size_t i = 0; i < grad_pn.size(); ++i) {
          grad_pn[i] *= lam.scar;
          grad_ps[i] *= lam.scar;
        }
        break;
      }
      case Objective::scar_dice: {
        LossValue ds = soft_dice_loss(f.p.p_scar, tc.scar);
        LossValue dn = soft_dice_loss(f.p.p_normal, tc.normal_wall);
        row.scar_dice = ds.value + dn.value;
        row.total = row.scar_dice;
        grad_ps = std::move(ds.grad);
        grad_pn = std::move(dn.grad);
        break;
      }
      case Objective::mtl_bce: {
        LossValue b = bce_loss(f.y, tc.la);
        LossValue bs = bce_loss(f.p.p_scar, tc.scar);
        LossValue bn = bce_loss(f.p.p_normal, tc.normal_wall);
        row.bce = b.value;
        row.scar_bce = bs.value + bn.value;
        row.total = b.value + row.scar_bce;
        grad_y = std::move(b.grad);
        grad_ps = std::move(bs.grad);
        grad_pn = std::move(bn.grad);
        break;
      }
      case Objective::mtl_se: {
        LossValue b = bce_loss(f.y, tc.la);
        LossValue s = se_loss_la(f.y, tc.phi);
        PairLossValue ss = se_loss_scar(f.p, tc.targets);
        row.bce = b.value;
        row.se_la = s.value;
        row.se_scar = ss.value;
        row.total = b.value + lam.la * s.value + lam.scar * ss.value;
        grad_y = std::move(b.grad);
        for (std::size_t i = 0; i < grad_y.size(); ++i) grad_y[i] += lam.la * s.grad[i];
        grad_pn = std::move(ss.grad_normal);
        grad_ps = std::move(ss.grad_scar);
        for (std::size_t i = 0; i < grad_pn.size(); ++i) {
          grad_pn[i] *= lam.scar;
          grad_ps[i] *= lam.scar;
        }
        break;
      }
      case Objective::mtl_sesa: {
        // The second attention band tracks the current cavity prediction and
        // is treated as a constant of the iteration.
        LabelMask la_pred = threshold_half(f.y);
        std::optional<LabelMask> m2;
        if (!la_pred.empty() && !la_pred.full())
          m2 = attention_mask(la_pred, cfg.attention_thickness);
        TotalLoss tl = total_loss(f.y, tc.la, tc.phi, f.p, tc.targets, tc.m1,
                                  m2 ? &*m2 : nullptr, lam);
        row.bce = tl.bce;
        row.se_la = tl.se_la;
        row.se_scar = tl.se_scar;
        row.sa_m1 = tl.sa_m1;
        row.sa_m2 = tl.sa_m2;
        row.total = tl.value;
        grad_y = std::move(tl.grad_la);
        grad_pn = std::move(tl.grad_normal);
        grad_ps = std::move(tl.grad_scar);
        break;
      }
    }

    if (!std::isfinite(row.total))
      throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(t) +
                               " (" + objective_name(cfg.objective) + ")");

    if (!trains_la(cfg.objective)) grad_y = Volume(g);
    if (!trains_scar(cfg.objective)) {
      grad_pn = Volume(g);
      grad_ps = Volume(g);
    }

    std::vector<double> grad = net.backward(grad_y, grad_pn, grad_ps);
    sgd_step(net, grad, t, cfg);
    log.push_back(row);
  }
  return log;
}

Prediction predict(Network& net, const Volume& vol, double d_max, int attention_thickness) {
  Prediction out;
  Volume norm = zscore_normalize(vol);
  Network::Forward f = net.forward(norm);
  out.y = std::move(f.y);
  out.p = std::move(f.p);
  out.la = threshold_half(out.y);
  out.la_valid = !out.la.empty() && !out.la.full();
  out.scar_raw = binarize_scar(out.p);
  if (out.la_valid) {
    LabelMask band = attention_mask(out.la, attention_thickness);
    LabelMask restricted(vol.grid());
    for (std::size_t i = 0; i < restricted.size(); ++i)
      restricted[i] = (out.scar_raw[i] != 0 && band[i] != 0) ? 1 : 0;
    out.scar = restricted;
    out.surface = project_to_surface(restricted, out.la, d_max);
  }
  return out;
}

}  // namespace laq
