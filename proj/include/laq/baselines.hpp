#ifndef LAQ_BASELINES_HPP
#define LAQ_BASELINES_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "laq/surface.hpp"
#include "laq/volume.hpp"

namespace laq {

// Fitted 1D Gaussian mixture. Components keep their init order (ascending
// quantile means); log_likelihood records one entry per accepted EM iteration
// and is non-decreasing.
struct GmmParams {
  int K = 0;
  std::vector<double> weight;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> log_likelihood;
};

// Cut index T in [0,254] maximizing the between-class variance of the split
// {bins <= T} vs {bins > T}; ties resolve to the lowest T. Throws when the
// histogram has mass in fewer than two bins.
int otsu_threshold(const std::array<std::uint64_t, 256>& histogram);

// Min-max normalizes band intensities into 256 bins, thresholds with
// otsu_threshold, takes band voxels above the cut as scar, and projects them
// onto the cavity surface.
SurfaceLabeling otsu_scar(const Volume& vol, const LabelMask& band, const LabelMask& la_mask,
                          double d_max);

// 1D EM with deterministic quantile initialization (seed only feeds the
// optional mean jitter). Variances are floored at 1e-6. Stops when the
// log-likelihood gain drops below tol or after max_iter iterations.
GmmParams em_fit(const std::vector<double>& samples, int K, std::uint64_t seed, int max_iter = 200,
                 double tol = 1e-8, double jitter = 0.0);

// Fits K components to the band intensities, declares the n_scar_components
// with the highest means scar, assigns voxels by maximum posterior, and
// projects the scar voxels onto the cavity surface.
SurfaceLabeling mgmm_scar(const Volume& vol, const LabelMask& band, const LabelMask& la_mask, int K,
                          int n_scar_components, double d_max, std::uint64_t seed = 0,
                          int max_iter = 200, double tol = 1e-8, double jitter = 0.0);

}  // namespace laq

#endif
