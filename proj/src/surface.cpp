#include "laq/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace laq {

std::size_t SurfaceLabeling::scar_count() const {
  return static_cast<std::size_t>(std::count(label.begin(), label.end(), SurfaceClass::scar));
}

LabelMask extract_boundary(const LabelMask& mask) {
  if (mask.empty()) throw std::invalid_argument("extract_boundary: empty mask");
  if (mask.full()) throw std::invalid_argument("extract_boundary: full mask has no exposed surface");

  const auto& g = mask.grid();
  LabelMask out(g);
  static constexpr int kSteps[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};

  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) {
        if (!mask.at(x, y, z)) continue;
        for (const auto& s : kSteps) {
          const int nx = x + s[0], ny = y + s[1], nz = z + s[2];
          if (!g.contains(nx, ny, nz) || !mask.at(nx, ny, nz)) {
            out.at(x, y, z) = 1;
            break;
          }
        }
      }
  return out;
}

LabelMask dilate_chebyshev(const LabelMask& mask, int rounds) {
  if (rounds < 0) throw std::invalid_argument("dilate_chebyshev: negative round count");

  const auto& g = mask.grid();
  LabelMask cur = mask;
  for (int t = 0; t < rounds; ++t) {
    LabelMask next = cur;
    for (int z = 0; z < g.dims[2]; ++z)
      for (int y = 0; y < g.dims[1]; ++y)
        for (int x = 0; x < g.dims[0]; ++x) {
          if (cur.at(x, y, z)) continue;
          bool hit = false;
          for (int dz = -1; dz <= 1 && !hit; ++dz)
            for (int dy = -1; dy <= 1 && !hit; ++dy)
              for (int dx = -1; dx <= 1 && !hit; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                const int nx = x + dx, ny = y + dy, nz = z + dz;
                if (g.contains(nx, ny, nz) && cur.at(nx, ny, nz)) hit = true;
              }
          if (hit) next.at(x, y, z) = 1;
        }
    cur = std::move(next);
  }
  return cur;
}

LabelMask attention_mask(const LabelMask& la_mask, int thickness) {
  if (thickness < 0) throw std::invalid_argument("attention_mask: thickness must be non-negative");
  return dilate_chebyshev(extract_boundary(la_mask), thickness);
}

LabelMask binarize_scar(const ProbabilityPair& pred) {
  if (!pred.p_normal.grid().same_geometry(pred.p_scar.grid()))
    throw std::invalid_argument("binarize_scar: geometry mismatch");

  LabelMask out(pred.p_scar.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pred.p_scar[i] > pred.p_normal[i] ? 1 : 0;
  return out;
}

SurfaceLabeling project_to_surface(const LabelMask& scar, const LabelMask& la_mask, double d_max) {
  if (!(d_max > 0.0)) throw std::invalid_argument("project_to_surface: d_max must be positive");
  if (!scar.grid().same_geometry(la_mask.grid()))
    throw std::invalid_argument("project_to_surface: geometry mismatch");

  const LabelMask boundary = extract_boundary(la_mask);
  const auto& g = la_mask.grid();

  SurfaceLabeling out;
  out.grid = g;
  for (std::size_t i = 0; i < boundary.size(); ++i)
    if (boundary[i]) out.surface.push_back(i);
  out.label.assign(out.surface.size(), SurfaceClass::normal);

  std::vector<std::array<int, 3>> sc(out.surface.size());
  for (std::size_t k = 0; k < out.surface.size(); ++k) sc[k] = g.coords(out.surface[k]);

  const double wx2 = g.spacing[0] * g.spacing[0];
  const double wy2 = g.spacing[1] * g.spacing[1];
  const double wz2 = g.spacing[2] * g.spacing[2];

  for (std::size_t v = 0; v < scar.size(); ++v) {
    if (!scar[v]) continue;
    const auto c = g.coords(v);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    // Ascending scan with strict < keeps the smallest linear index on ties.
    for (std::size_t k = 0; k < sc.size(); ++k) {
      const double dx = static_cast<double>((c[0] - sc[k][0]) * (c[0] - sc[k][0]));
      const double dy = static_cast<double>((c[1] - sc[k][1]) * (c[1] - sc[k][1]));
      const double dz = static_cast<double>((c[2] - sc[k][2]) * (c[2] - sc[k][2]));
      const double d2 = (wx2 * dx + wy2 * dy) + wz2 * dz;
      if (d2 < best) {
        best = d2;
        best_k = k;
      }
    }
    if (std::sqrt(best) <= d_max) out.label[best_k] = SurfaceClass::scar;
  }
  return out;
}

void save_surface_labeling(const SurfaceLabeling& s, const std::string& path) {
  if (s.surface.size() != s.label.size())
    throw std::invalid_argument("save_surface_labeling: surface/label size mismatch");

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_surface_labeling: cannot open " + path);

  char buf[128];
  f << "# surface labeling v1\n";
  std::snprintf(buf, sizeof buf, "# dims,%d,%d,%d\n", s.grid.dims[0], s.grid.dims[1], s.grid.dims[2]);
  f << buf;
  std::snprintf(buf, sizeof buf, "# spacing,%.17g,%.17g,%.17g\n", s.grid.spacing[0], s.grid.spacing[1],
                s.grid.spacing[2]);
  f << buf;
  f << "x,y,z,label\n";
  for (std::size_t k = 0; k < s.surface.size(); ++k) {
    const auto c = s.grid.coords(s.surface[k]);
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d\n", c[0], c[1], c[2], static_cast<int>(s.label[k]));
    f << buf;
  }
  if (!f) throw std::runtime_error("save_surface_labeling: write failed for " + path);
}

SurfaceLabeling load_surface_labeling(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_surface_labeling: cannot open " + path);

  auto fail = [&](const std::string& why) {
    throw std::runtime_error("load_surface_labeling: " + why + " in " + path);
  };

  SurfaceLabeling s;
  std::string line;
  if (!std::getline(f, line) || line != "# surface labeling v1") fail("bad signature");
  if (!std::getline(f, line) ||
      std::sscanf(line.c_str(), "# dims,%d,%d,%d", &s.grid.dims[0], &s.grid.dims[1], &s.grid.dims[2]) != 3)
    fail("bad dims header");
  if (!std::getline(f, line) || std::sscanf(line.c_str(), "# spacing,%lf,%lf,%lf", &s.grid.spacing[0],
                                            &s.grid.spacing[1], &s.grid.spacing[2]) != 3)
    fail("bad spacing header");
  if (s.grid.dims[0] < 1 || s.grid.dims[1] < 1 || s.grid.dims[2] < 1) fail("non-positive dims");
  if (!(s.grid.spacing[0] > 0.0) || !(s.grid.spacing[1] > 0.0) || !(s.grid.spacing[2] > 0.0))
    fail("non-positive spacing");
  if (!std::getline(f, line) || line != "x,y,z,label") fail("bad column header");

  while (std::getline(f, line)) {
    if (line.empty()) continue;
    int x, y, z, lab;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%d", &x, &y, &z, &lab) != 4) fail("bad row '" + line + "'");
    if (!s.grid.contains(x, y, z)) fail("row out of bounds '" + line + "'");
    if (lab != 0 && lab != 1) fail("bad label '" + line + "'");
    const std::size_t idx = s.grid.index(x, y, z);
    if (!s.surface.empty() && idx <= s.surface.back()) fail("rows not in ascending index order");
    s.surface.push_back(idx);
    s.label.push_back(lab ? SurfaceClass::scar : SurfaceClass::normal);
  }
  return s;
}

std::pair<LabelMask, LabelMask> surface_labeling_to_masks(const SurfaceLabeling& s) {
  LabelMask normal(s.grid), scar(s.grid);
  for (std::size_t k = 0; k < s.surface.size(); ++k) {
    if (s.label[k] == SurfaceClass::scar)
      scar[s.surface[k]] = 1;
    else
      normal[s.surface[k]] = 1;
  }
  return {std::move(normal), std::move(scar)};
}

}  // namespace laq
