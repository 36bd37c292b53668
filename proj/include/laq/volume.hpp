#ifndef LAQ_VOLUME_HPP
#define LAQ_VOLUME_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "laq/grid.hpp"

namespace laq {

// Scalar 3D image. All arithmetic in the toolkit runs in double precision;
// narrower file payloads are widened on load.
class Volume {
 public:
  Volume() = default;
  Volume(GridInfo grid, double fill = 0.0);

  const GridInfo& grid() const { return grid_; }
  const std::array<int, 3>& dims() const { return grid_.dims; }
  const std::array<double, 3>& spacing() const { return grid_.spacing; }
  std::size_t size() const { return data_.size(); }

  double& at(int x, int y, int z) { return data_[grid_.index(x, y, z)]; }
  double at(int x, int y, int z) const { return data_[grid_.index(x, y, z)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  GridInfo grid_;
  std::vector<double> data_;
};

// Distance fields share the scalar-grid representation; values are mm
// (or mm^beta after exponentiation).
using DistanceField = Volume;

// Pair of per-class distance-probability fields, values in (0,1].
struct ProbabilityPair {
  DistanceField p_normal;
  DistanceField p_scar;
};

// Binary 3D grid. Values are restricted to {0,1}.
class LabelMask {
 public:
  LabelMask() = default;
  LabelMask(GridInfo grid, std::uint8_t fill = 0);

  const GridInfo& grid() const { return grid_; }
  const std::array<int, 3>& dims() const { return grid_.dims; }
  const std::array<double, 3>& spacing() const { return grid_.spacing; }
  std::size_t size() const { return data_.size(); }

  std::uint8_t& at(int x, int y, int z) { return data_[grid_.index(x, y, z)]; }
  std::uint8_t at(int x, int y, int z) const { return data_[grid_.index(x, y, z)]; }
  std::uint8_t& operator[](std::size_t i) { return data_[i]; }
  std::uint8_t operator[](std::size_t i) const { return data_[i]; }

  std::vector<std::uint8_t>& data() { return data_; }
  const std::vector<std::uint8_t>& data() const { return data_; }

  std::size_t foreground_count() const;
  bool empty() const { return foreground_count() == 0; }
  bool full() const { return foreground_count() == size(); }

 private:
  GridInfo grid_;
  std::vector<std::uint8_t> data_;
};

// Native volume file I/O (.lqv) plus uncompressed NIfTI-1 reading.
// Byte layouts are documented in docs/file_formats.md.
Volume load_volume(const std::string& path);
LabelMask load_mask(const std::string& path);
void save_volume(const Volume& vol, const std::string& path);
void save_volume(const LabelMask& mask, const std::string& path);

// Z-score normalization with the population standard deviation.
// Throws on constant input.
Volume zscore_normalize(const Volume& vol);

// Crops to `size` with the output centered on `center`; out-of-range source
// voxels are zero-padded. Source voxel for output o is o + center - size/2.
Volume crop_centered(const Volume& vol, std::array<int, 3> size, std::array<int, 3> center);
LabelMask crop_centered(const LabelMask& mask, std::array<int, 3> size, std::array<int, 3> center);

// Rounded mean of foreground voxel coordinates. Throws on an empty mask.
std::array<int, 3> mask_centroid(const LabelMask& mask);

}  // namespace laq

#endif
