#ifndef LAQ_PHANTOM_HPP
#define LAQ_PHANTOM_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "laq/volume.hpp"

namespace laq {

// Synthetic LGE-like test volume: bright cavity blood pool, thin wall with
// brighter scar patches, dark background, optional bright confounder blobs
// away from the cavity, optional additive Gaussian noise.
struct PhantomConfig {
  std::array<int, 3> dims{32, 32, 32};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  double radius_frac = 0.30;    // base radius as a fraction of each dim
  double radius_jitter = 0.10;  // relative per-axis radius perturbation
  double perturb_amp = 0.08;    // low-order radial perturbation amplitude

  int wall_thickness = 1;  // voxels, 1 or 2 (thickness 2 adds one outward layer)

  int min_scar_patches = 1;
  int max_scar_patches = 4;
  double scar_fraction_min = 0.08;  // of wall voxels
  double scar_fraction_max = 0.45;

  double mu_background = 0.2;
  double mu_blood_pool = 1.0;
  double mu_wall = 0.45;
  double contrast_k = 3.0;       // scar mean = mu_wall + contrast_k * contrast_sigma
  double contrast_sigma = 0.1;

  int max_confounders = 3;        // bright blobs outside the cavity, 0..max
  double mu_confounder = 1.0;
  int confounder_margin = 3;      // min Chebyshev distance from any cavity voxel

  double noise_sigma = 0.0;  // additive Gaussian noise
};

struct PhantomCase {
  Volume image;
  LabelMask la;
  LabelMask wall;
  LabelMask scar;
};

double scar_mean(const PhantomConfig& cfg);

// Deterministic given (cfg, seed). Guarantees scar within wall, wall within
// the cavity's boundary band, scar fraction within the configured range, and
// a nonempty cavity clear of the volume edge. Throws when the config cannot
// produce a valid cavity.
PhantomCase generate_phantom(const PhantomConfig& cfg, std::uint64_t seed);

// n cases with seeds seed+0 .. seed+n-1, written under dir/case_?? as native
// volumes, plus a manifest recording the generation parameters.
struct DatasetPaths {
  std::string dir;
  std::vector<std::string> case_dirs;
};

DatasetPaths generate_dataset(int n, const PhantomConfig& cfg, std::uint64_t seed,
                              const std::string& dir, const std::string& manifest_extra = "");

// First k indices train, the rest test.
struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;
};

SplitIndices split_dataset(int n, int k);

}  // namespace laq

#endif
