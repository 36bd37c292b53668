#ifndef LAQ_GRID_HPP
#define LAQ_GRID_HPP

#include <array>
#include <cmath>
#include <cstddef>

namespace laq {

// Regular 3D voxel grid. Linear layout is z-major with x fastest:
// index(x,y,z) = x + nx*(y + ny*z).
struct GridInfo {
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
  }

  std::array<int, 3> coords(std::size_t idx) const {
    const int nx = dims[0];
    const int ny = dims[1];
    const int x = static_cast<int>(idx % static_cast<std::size_t>(nx));
    const int y = static_cast<int>((idx / static_cast<std::size_t>(nx)) % static_cast<std::size_t>(ny));
    const int z = static_cast<int>(idx / (static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)));
    return {x, y, z};
  }

  bool contains(int x, int y, int z) const {
    return x >= 0 && x < dims[0] && y >= 0 && y < dims[1] && z >= 0 && z < dims[2];
  }

  bool same_geometry(const GridInfo& o) const {
    return dims == o.dims && spacing == o.spacing;
  }

  // Physical diagonal of the full grid extent in mm.
  double diagonal_mm() const {
    const double ex = dims[0] * spacing[0];
    const double ey = dims[1] * spacing[1];
    const double ez = dims[2] * spacing[2];
    return std::sqrt(ex * ex + ey * ey + ez * ez);
  }
};

}  // namespace laq

#endif
