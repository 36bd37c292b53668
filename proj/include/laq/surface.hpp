#ifndef LAQ_SURFACE_HPP
#define LAQ_SURFACE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "laq/volume.hpp"

namespace laq {

// Surface voxel class labels.
enum class SurfaceClass : std::uint8_t { normal = 0, scar = 1 };

// Per-surface-voxel class assignment over the boundary voxel set of an LA
// mask. `surface` holds linear voxel indices in ascending order; `label` is
// parallel to it.
struct SurfaceLabeling {
  GridInfo grid;
  std::vector<std::size_t> surface;
  std::vector<SurfaceClass> label;

  std::size_t scar_count() const;
};

// Foreground voxels with at least one 6-connected background neighbor;
// out-of-volume counts as background. Throws on an empty or full mask.
LabelMask extract_boundary(const LabelMask& mask);

// `rounds` unit dilations with the 26-neighborhood, i.e. the Chebyshev ball
// of radius `rounds` around the input set.
LabelMask dilate_chebyshev(const LabelMask& mask, int rounds);

// Voxels within Chebyshev distance t of extract_boundary(la_mask).
// t = 0 returns the boundary itself.
LabelMask attention_mask(const LabelMask& la_mask, int thickness);

// Scar iff p_scar > p_normal; ties go to normal.
LabelMask binarize_scar(const ProbabilityPair& pred);

// Maps every scar voxel to its nearest surface voxel (spacing-aware Euclidean,
// nearest-index ties broken by smallest linear index). A surface voxel is
// labeled scar iff at least one scar voxel within d_max mm maps to it.
SurfaceLabeling project_to_surface(const LabelMask& scar, const LabelMask& la_mask, double d_max);

// CSV of (x,y,z,label) rows with a dims/spacing sidecar header; see
// docs/file_formats.md.
void save_surface_labeling(const SurfaceLabeling& s, const std::string& path);
SurfaceLabeling load_surface_labeling(const std::string& path);

// Splits a labeling into (normal, scar) masks for visualization.
std::pair<LabelMask, LabelMask> surface_labeling_to_masks(const SurfaceLabeling& s);

}  // namespace laq

#endif
