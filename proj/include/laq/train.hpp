#ifndef LAQ_TRAIN_HPP
#define LAQ_TRAIN_HPP

#include <optional>
#include <string>
#include <vector>

#include "laq/losses.hpp"
#include "laq/nn.hpp"
#include "laq/phantom.hpp"
#include "laq/surface.hpp"
#include "laq/volume.hpp"

namespace laq {

// Training objective variants. The network always carries both heads; a
// variant determines which losses produce gradients, so the unused decoder
// receives exactly zero gradient.
enum class Objective {
  la_bce,     // cavity head, cross entropy only
  la_se,      // cavity head, cross entropy + spatial encoding
  la_dice,    // cavity head, soft Dice
  scar_bce,   // scar head, per-channel cross entropy
  scar_se,    // scar head, distance-probability regression
  scar_dice,  // scar head, soft Dice per channel
  mtl_bce,    // both heads, cross entropy
  mtl_se,     // both heads, cross entropy + both spatial-encoding terms
  mtl_sesa,   // full composite with both shape-attention terms
};

Objective parse_objective(const std::string& name);
std::string objective_name(Objective o);
bool trains_la(Objective o);
bool trains_scar(Objective o);

struct TrainConfig {
  double lr0 = 0.001;
  long lr_decay_every = 4000;  // divide by 10 this often
  double momentum = 0.9;
  double weight_decay = 0.0001;

  LambdaSet lambda;
  long lambda_every = 200;
  double lambda_factor = 1.1;

  long iterations = 400;
  std::uint64_t seed = 1;
  Objective objective = Objective::mtl_sesa;

  double beta = 1.0;           // signed distance-map exponent
  int attention_thickness = 1; // band half-width for the attention masks
};

double learning_rate(const TrainConfig& cfg, long iteration);

// v <- momentum*v + (g + weight_decay*theta); theta <- theta - lr(t)*v.
// Throws on non-finite gradients.
void sgd_step(Network& net, const std::vector<double>& grad, long iteration,
              const TrainConfig& cfg);

// One case with every static target precomputed.
struct TrainCase {
  std::string id;
  Volume image;  // z-score normalized
  LabelMask la;
  LabelMask wall;
  LabelMask scar;
  LabelMask normal_wall;  // wall minus scar
  DistanceField phi;
  ProbabilityPair targets;
  LabelMask m1;  // attention band of the gold cavity
};

TrainCase prepare_case(const PhantomCase& pc, const std::string& id, double beta,
                       int attention_thickness);

struct TrainLogRow {
  long iteration = 0;
  double lr = 0.0;
  LambdaSet lambda;
  double bce = 0.0, se_la = 0.0, se_scar = 0.0, sa_m1 = 0.0, sa_m2 = 0.0;
  double scar_bce = 0.0, scar_dice = 0.0;
  double total = 0.0;
};

std::string train_log_csv(const std::vector<TrainLogRow>& rows);

// Sequential SGD over seeded epoch shuffles; one case per iteration.
// Deterministic given (net state, cases order, cfg). Aborts with a diagnostic
// on non-finite loss.
std::vector<TrainLogRow> train(Network& net, const std::vector<TrainCase>& cases,
                               const TrainConfig& cfg);

struct Prediction {
  Volume y;
  ProbabilityPair p;
  LabelMask la;        // y > 0.5
  bool la_valid = false;  // nonempty and not full
  LabelMask scar_raw;  // p_scar > p_normal, unrestricted
  std::optional<LabelMask> scar;            // restricted to the predicted cavity band
  std::optional<SurfaceLabeling> surface;   // projected onto the predicted cavity
};

// Normalizes, runs the network, binarizes both heads, and projects onto the
// predicted cavity surface when that cavity has a boundary.
Prediction predict(Network& net, const Volume& vol, double d_max, int attention_thickness);

}  // namespace laq

#endif
