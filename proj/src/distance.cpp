#include "laq/distance.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "laq/surface.hpp"

namespace laq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb & Huttenlocher lower-envelope pass over one line:
// out[i] = min_j (in[j] + w2*(i-j)^2). Parabolas with infinite height are
// skipped; a line with no finite entry stays infinite.
void envelope_pass(const double* in, double* out, int n, double w2, int* hull, double* bounds) {
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (in[q] == kInf) continue;
    double s = 0.0;
    while (k >= 0) {
      const int p = hull[k];
      s = ((in[q] + w2 * static_cast<double>(q) * q) - (in[p] + w2 * static_cast<double>(p) * p)) /
          (2.0 * w2 * static_cast<double>(q - p));
      if (s <= bounds[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    hull[k] = q;
    bounds[k] = (k == 0) ? -kInf : s;
  }

  if (k < 0) {
    for (int i = 0; i < n; ++i) out[i] = kInf;
    return;
  }

  const int top = k;
  k = 0;
  for (int i = 0; i < n; ++i) {
    while (k < top && bounds[k + 1] < static_cast<double>(i)) ++k;
    const int p = hull[k];
    const double d = static_cast<double>(i - p);
    out[i] = in[p] + w2 * (d * d);
  }
}

// Runs one separable pass along `axis` over the whole field in place.
void axis_pass(Volume& field, int axis) {
  const auto& dims = field.grid().dims;
  const double w = field.grid().spacing[axis];
  const double w2 = w * w;
  const int n = dims[axis];

  std::vector<double> line(n), out(n), bounds(n + 1);
  std::vector<int> hull(n);

  const std::size_t stride_x = 1;
  const std::size_t stride_y = static_cast<std::size_t>(dims[0]);
  const std::size_t stride_z = static_cast<std::size_t>(dims[0]) * dims[1];
  const std::size_t strides[3] = {stride_x, stride_y, stride_z};
  const std::size_t stride = strides[axis];

  const int oa = (axis == 0) ? 1 : 0;           // first orthogonal axis
  const int ob = (axis == 2) ? 1 : 2;           // second orthogonal axis
  auto& data = field.data();

  for (int b = 0; b < dims[ob]; ++b) {
    for (int a = 0; a < dims[oa]; ++a) {
      std::size_t base = static_cast<std::size_t>(a) * strides[oa] + static_cast<std::size_t>(b) * strides[ob];
      for (int i = 0; i < n; ++i) line[i] = data[base + static_cast<std::size_t>(i) * stride];
      envelope_pass(line.data(), out.data(), n, w2, hull.data(), bounds.data());
      for (int i = 0; i < n; ++i) data[base + static_cast<std::size_t>(i) * stride] = out[i];
    }
  }
}

}  // namespace

DistanceField edt_squared(const LabelMask& mask) {
  if (mask.empty()) throw std::invalid_argument("edt: empty mask");

  DistanceField field(mask.grid());
  for (std::size_t i = 0; i < mask.size(); ++i) field[i] = mask[i] ? 0.0 : kInf;

  // Fixed pass order x, y, z keeps results bit-identical across runs.
  axis_pass(field, 0);
  axis_pass(field, 1);
  axis_pass(field, 2);
  return field;
}

DistanceField edt(const LabelMask& mask) {
  DistanceField field = edt_squared(mask);
  for (auto& v : field.data()) v = std::sqrt(v);
  return field;
}

DistanceField edt_brute_force_squared(const LabelMask& mask) {
  if (mask.empty()) throw std::invalid_argument("edt_brute_force: empty mask");

  const auto& g = mask.grid();
  const double wx2 = g.spacing[0] * g.spacing[0];
  const double wy2 = g.spacing[1] * g.spacing[1];
  const double wz2 = g.spacing[2] * g.spacing[2];

  std::vector<std::array<int, 3>> seeds;
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x)
        if (mask.at(x, y, z)) seeds.push_back({x, y, z});

  DistanceField field(g);
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) {
        double best = kInf;
        for (const auto& s : seeds) {
          const double dx = static_cast<double>((x - s[0]) * (x - s[0]));
          const double dy = static_cast<double>((y - s[1]) * (y - s[1]));
          const double dz = static_cast<double>((z - s[2]) * (z - s[2]));
          const double d2 = (wx2 * dx + wy2 * dy) + wz2 * dz;
          if (d2 < best) best = d2;
        }
        field.at(x, y, z) = best;
      }
  return field;
}

DistanceField edt_brute_force(const LabelMask& mask) {
  DistanceField field = edt_brute_force_squared(mask);
  for (auto& v : field.data()) v = std::sqrt(v);
  return field;
}

DistanceField signed_dtm(const LabelMask& mask, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("signed_dtm: beta must be positive");
  const LabelMask boundary = extract_boundary(mask);  // throws on empty/full mask

  DistanceField d = edt(boundary);
  DistanceField phi(mask.grid());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    double mag;
    if (beta == 1.0) {
      mag = d[i];
    } else if (beta == 2.0) {
      mag = d[i] * d[i];
    } else {
      mag = std::pow(d[i], beta);
    }
    if (boundary[i]) {
      phi[i] = 0.0;
    } else if (mask[i]) {
      phi[i] = -mag;
    } else {
      phi[i] = mag;
    }
  }
  return phi;
}

ProbabilityPair distance_probability_maps(const LabelMask& scar, const LabelMask& wall) {
  if (!scar.grid().same_geometry(wall.grid()))
    throw std::invalid_argument("distance_probability_maps: geometry mismatch");
  if (wall.empty()) throw std::invalid_argument("distance_probability_maps: empty wall");
  for (std::size_t i = 0; i < scar.size(); ++i)
    if (scar[i] && !wall[i])
      throw std::invalid_argument("distance_probability_maps: scar is not contained in wall");

  LabelMask normal(wall.grid());
  for (std::size_t i = 0; i < wall.size(); ++i) normal[i] = wall[i] && !scar[i];

  const double fallback = std::exp(-wall.grid().diagonal_mm());
  auto prob_map = [&](const LabelMask& region) {
    if (region.empty()) return DistanceField(region.grid(), fallback);
    DistanceField d = edt(region);
    for (auto& v : d.data()) v = std::exp(-v);
    return d;
  };

  ProbabilityPair pair;
  pair.p_normal = prob_map(normal);
  pair.p_scar = prob_map(scar);
  return pair;
}

}  // namespace laq
