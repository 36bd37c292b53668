#ifndef LAQ_METRICS_HPP
#define LAQ_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "laq/surface.hpp"
#include "laq/volume.hpp"

namespace laq {

// One evaluated case. Volume metrics compare cavity masks; surface metrics
// compare labelings projected onto the same gold surface. Absent fields mean
// the metric could not be computed (e.g. an empty predicted cavity has no
// boundary for asd/hd).
struct MetricReport {
  std::optional<double> dice;
  std::optional<double> asd_mm;
  std::optional<double> hd_mm;
  std::optional<double> accuracy;
  std::optional<double> dice_scar;
  std::optional<double> gdice;
};

// 2|a^b| / (|a|+|b|). Throws when both masks are empty.
double dice(const LabelMask& a, const LabelMask& b);

// Symmetric mean of boundary-to-boundary nearest distances in mm.
double asd(const LabelMask& a, const LabelMask& b);

// Full (maximum) symmetric Hausdorff distance over the boundary sets, in mm.
double hausdorff(const LabelMask& a, const LabelMask& b);

// Fraction of surface voxels whose class labels agree. Both labelings must
// cover the identical surface voxel set.
double surface_accuracy(const SurfaceLabeling& pred, const SurfaceLabeling& gold);

// Dice of the scar-labeled subsets; throws when both are empty.
double dice_scar(const SurfaceLabeling& pred, const SurfaceLabeling& gold);

// Two-class generalized Dice with uniform class weights:
// 2 * sum_k |P_k ^ G_k| / sum_k (|P_k| + |G_k|).
double generalized_dice(const SurfaceLabeling& pred, const SurfaceLabeling& gold);

// CSV serialization: one row per case, absent metrics as empty cells.
std::string metric_csv_header();
std::string metric_csv_row(const std::string& case_id, const MetricReport& r);

// Mean and population standard deviation per metric over the present values.
struct MetricSummary {
  struct Stat {
    int n = 0;
    double mean = 0.0;
    double stddev = 0.0;
  };
  Stat dice, asd_mm, hd_mm, accuracy, dice_scar, gdice;
};

MetricSummary summarize(const std::vector<MetricReport>& reports);
std::string summary_csv(const MetricSummary& s);

}  // namespace laq

#endif
