#ifndef LAQ_DISTANCE_HPP
#define LAQ_DISTANCE_HPP

#include "laq/volume.hpp"

namespace laq {

// Exact Euclidean distance transform: per-voxel distance in mm (spacing-aware,
// voxel centers) to the nearest foreground voxel of `mask`; 0 on foreground.
// Three separable lower-envelope-of-parabolas passes over squared distances.
// Throws on an empty mask.
DistanceField edt(const LabelMask& mask);
DistanceField edt_squared(const LabelMask& mask);

// Exhaustive O(N^2) reference transform, intended for grids <= 16^3.
DistanceField edt_brute_force(const LabelMask& mask);
DistanceField edt_brute_force_squared(const LabelMask& mask);

// Signed distance map of Eq.-style form: -d^beta inside the mask (excluding
// its boundary voxel set S), 0 on S, +d^beta outside, where d is the distance
// to the nearest S voxel and S follows surface.hpp's 6-connectivity rule.
// Throws when the mask is empty or full (no boundary exists).
DistanceField signed_dtm(const LabelMask& mask, double beta);

// Per-class distance-probability targets p = exp(-d') where d' is 0 inside
// the class region and the distance to it elsewhere. Normal wall = wall minus
// scar. An empty class region yields the constant exp(-diagonal_mm()).
// Requires scar to be a subset of wall and wall nonempty.
ProbabilityPair distance_probability_maps(const LabelMask& scar, const LabelMask& wall);

}  // namespace laq

#endif
