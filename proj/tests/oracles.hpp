#ifndef LAQ_TESTS_ORACLES_HPP
#define LAQ_TESTS_ORACLES_HPP

// Independent reference implementations for example freezing. Everything here
// is deliberately naive: direct definitions, exhaustive scans, no sharing with
// the library's algorithms beyond the public data types.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "laq/rng.hpp"
#include "laq/surface.hpp"
#include "laq/volume.hpp"

namespace oracle {

struct Voxel {
  int x, y, z;
};

inline std::vector<Voxel> boundary_set(const laq::LabelMask& m) {
  const auto& d = m.dims();
  auto bg = [&](int x, int y, int z) {
    if (x < 0 || y < 0 || z < 0 || x >= d[0] || y >= d[1] || z >= d[2]) return true;
    return m.at(x, y, z) == 0;
  };
  std::vector<Voxel> out;
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        if (!m.at(x, y, z)) continue;
        if (bg(x - 1, y, z) || bg(x + 1, y, z) || bg(x, y - 1, z) || bg(x, y + 1, z) ||
            bg(x, y, z - 1) || bg(x, y, z + 1))
          out.push_back({x, y, z});
      }
  return out;
}

inline double dist_mm(const Voxel& a, const Voxel& b, const std::array<double, 3>& sp) {
  const double dx = sp[0] * (a.x - b.x);
  const double dy = sp[1] * (a.y - b.y);
  const double dz = sp[2] * (a.z - b.z);
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double nearest_mm(const Voxel& a, const std::vector<Voxel>& set,
                         const std::array<double, 3>& sp) {
  double best = std::numeric_limits<double>::infinity();
  for (const Voxel& b : set) best = std::min(best, dist_mm(a, b, sp));
  return best;
}

// Symmetric average surface distance over boundary voxel sets, all pairs.
inline double brute_asd(const laq::LabelMask& a, const laq::LabelMask& b) {
  const auto ba = boundary_set(a);
  const auto bb = boundary_set(b);
  const auto& sp = a.spacing();
  double sum = 0.0;
  for (const Voxel& v : ba) sum += nearest_mm(v, bb, sp);
  for (const Voxel& v : bb) sum += nearest_mm(v, ba, sp);
  return sum / static_cast<double>(ba.size() + bb.size());
}

inline double brute_hd(const laq::LabelMask& a, const laq::LabelMask& b) {
  const auto ba = boundary_set(a);
  const auto bb = boundary_set(b);
  const auto& sp = a.spacing();
  double worst = 0.0;
  for (const Voxel& v : ba) worst = std::max(worst, nearest_mm(v, bb, sp));
  for (const Voxel& v : bb) worst = std::max(worst, nearest_mm(v, ba, sp));
  return worst;
}

// Exhaustive 255-cut Otsu search; ties keep the lowest cut.
inline int brute_otsu(const std::array<std::uint64_t, 256>& h) {
  double total = 0.0, total_mass = 0.0;
  for (int i = 0; i < 256; ++i) {
    total += static_cast<double>(h[static_cast<std::size_t>(i)]) * i;
    total_mass += static_cast<double>(h[static_cast<std::size_t>(i)]);
  }
  int best_t = -1;
  double best_v = -1.0;
  for (int t = 0; t < 255; ++t) {
    double w0 = 0.0, s0 = 0.0;
    for (int i = 0; i <= t; ++i) {
      w0 += static_cast<double>(h[static_cast<std::size_t>(i)]);
      s0 += static_cast<double>(h[static_cast<std::size_t>(i)]) * i;
    }
    const double w1 = total_mass - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = s0 / w0;
    const double mu1 = (total - s0) / w1;
    const double v = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  }
  return best_t;
}

// Chebyshev ball of radius t around the boundary set, by exhaustive scan.
inline laq::LabelMask brute_attention(const laq::LabelMask& la, int t) {
  const auto bset = boundary_set(la);
  laq::LabelMask out(la.grid());
  const auto& d = la.dims();
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x)
        for (const Voxel& b : bset) {
          const int c = std::max({std::abs(x - b.x), std::abs(y - b.y), std::abs(z - b.z)});
          if (c <= t) {
            out.at(x, y, z) = 1;
            break;
          }
        }
  return out;
}

// All-pairs nearest-surface projection with the smallest-linear-index tie
// rule, against the library's own surface ordering contract.
inline laq::SurfaceLabeling brute_project(const laq::LabelMask& scar, const laq::LabelMask& la,
                                          double d_max) {
  const auto bset = boundary_set(la);
  const auto& sp = la.spacing();
  laq::SurfaceLabeling out;
  out.grid = la.grid();
  for (const Voxel& b : bset) {
    out.surface.push_back(la.grid().index(b.x, b.y, b.z));
    out.label.push_back(laq::SurfaceClass::normal);
  }
  // boundary_set scans z,y,x outer to inner which yields ascending indices
  const auto& d = scar.dims();
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        if (!scar.at(x, y, z)) continue;
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < bset.size(); ++i) {
          const double dd = dist_mm({x, y, z}, bset[i], sp);
          if (dd < best) {
            best = dd;
            best_i = i;
          }
        }
        if (best <= d_max) out.label[best_i] = laq::SurfaceClass::scar;
      }
  return out;
}

// Central finite differences against an analytic gradient, one probe per
// coordinate in `probe`. Returns the worst relative error, where the
// denominator saturates at 1 so near-zero gradients are judged absolutely.
inline double fd_worst_rel_err(std::vector<double>& theta,
                               const std::function<double()>& eval,
                               const std::vector<double>& analytic,
                               const std::vector<std::size_t>& probe) {
  double worst = 0.0;
  for (std::size_t j : probe) {
    const double save = theta[j];
    const double h = 1e-6 * std::max(1.0, std::fabs(save));
    theta[j] = save + h;
    const double fp = eval();
    theta[j] = save - h;
    const double fm = eval();
    theta[j] = save;
    const double fd = (fp - fm) / (2.0 * h);
    const double err = std::fabs(fd - analytic[j]) / std::max(1.0, std::fabs(analytic[j]));
    worst = std::max(worst, err);
  }
  return worst;
}

// Random blob mask: a few seeded balls, guaranteed nonempty and not full.
inline laq::LabelMask random_blob(laq::Rng& rng, std::array<int, 3> dims,
                                  std::array<double, 3> sp = {1.0, 1.0, 1.0}) {
  laq::GridInfo g{dims, sp};
  laq::LabelMask m(g);
  const int balls = static_cast<int>(rng.uniform_int(1, 3));
  for (int b = 0; b < balls; ++b) {
    const int cx = static_cast<int>(rng.uniform_int(1, dims[0] - 2));
    const int cy = static_cast<int>(rng.uniform_int(1, dims[1] - 2));
    const int cz = static_cast<int>(rng.uniform_int(1, dims[2] - 2));
    const double r = rng.uniform(1.0, dims[0] / 3.0);
    for (int z = 0; z < dims[2]; ++z)
      for (int y = 0; y < dims[1]; ++y)
        for (int x = 0; x < dims[0]; ++x) {
          const double dx = x - cx, dy = y - cy, dz = z - cz;
          if (dx * dx + dy * dy + dz * dz <= r * r) m.at(x, y, z) = 1;
        }
  }
  if (m.empty()) m.at(dims[0] / 2, dims[1] / 2, dims[2] / 2) = 1;
  if (m.full()) m.at(0, 0, 0) = 0;
  return m;
}

inline laq::Volume random_field(laq::Rng& rng, std::array<int, 3> dims, double lo, double hi) {
  laq::Volume v(laq::GridInfo{dims, {1.0, 1.0, 1.0}});
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

}  // namespace oracle

#endif
