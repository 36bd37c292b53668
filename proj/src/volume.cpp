#include "laq/volume.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "file I/O assumes a little-endian host");

namespace laq {

namespace {

constexpr char kMagic[24] = {'L', 'A', 'Q', 'V', 'O', 'L'};  // NUL-padded
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF64 = 0;
constexpr std::uint8_t kDtypeU8 = 1;

#pragma pack(push, 1)
struct NativeHeader {
  char magic[24];
  std::uint32_t version;
  std::uint32_t reserved;
  std::uint32_t nx, ny, nz;
  double sx, sy, sz;
  // followed by one u8 dtype tag, then the raw payload
};
#pragma pack(pop)
static_assert(sizeof(NativeHeader) == 68);

void check_grid(const GridInfo& g, const std::string& path) {
  for (int a = 0; a < 3; ++a) {
    if (g.dims[a] < 1) throw std::runtime_error(path + ": dimension " + std::to_string(a) + " < 1");
    if (!(g.spacing[a] > 0.0)) throw std::runtime_error(path + ": spacing " + std::to_string(a) + " <= 0");
  }
}

void check_finite(const std::vector<double>& data, const std::string& path) {
  for (double v : data) {
    if (!std::isfinite(v)) throw std::runtime_error(path + ": payload contains NaN or Inf");
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::size_t file_size(std::ifstream& in) {
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(0, std::ios::beg);
  return static_cast<std::size_t>(end);
}

bool has_native_magic(std::ifstream& in) {
  char buf[24] = {};
  in.read(buf, sizeof(buf));
  in.clear();
  in.seekg(0, std::ios::beg);
  return std::memcmp(buf, kMagic, sizeof(kMagic)) == 0;
}

struct NativePayload {
  GridInfo grid;
  std::uint8_t dtype = kDtypeF64;
  std::vector<double> f64;
  std::vector<std::uint8_t> u8;
};

NativePayload load_native(const std::string& path) {
  std::ifstream in = open_input(path);
  const std::size_t fsize = file_size(in);

  NativeHeader hdr{};
  std::uint8_t dtype = 0;
  if (fsize < sizeof(hdr) + 1) throw std::runtime_error(path + ": truncated header");
  in.read(reinterpret_cast<char*>(&hdr), sizeof(hdr));
  in.read(reinterpret_cast<char*>(&dtype), 1);
  if (std::memcmp(hdr.magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error(path + ": bad magic");
  if (hdr.version != kVersion)
    throw std::runtime_error(path + ": unsupported version " + std::to_string(hdr.version));
  if (dtype != kDtypeF64 && dtype != kDtypeU8)
    throw std::runtime_error(path + ": unsupported datatype tag " + std::to_string(dtype));

  NativePayload out;
  out.grid.dims = {static_cast<int>(hdr.nx), static_cast<int>(hdr.ny), static_cast<int>(hdr.nz)};
  out.grid.spacing = {hdr.sx, hdr.sy, hdr.sz};
  out.dtype = dtype;
  check_grid(out.grid, path);

  const std::size_t n = out.grid.voxel_count();
  const std::size_t elem = (dtype == kDtypeF64) ? 8 : 1;
  if (fsize != sizeof(hdr) + 1 + n * elem)
    throw std::runtime_error(path + ": header/body size mismatch");

  if (dtype == kDtypeF64) {
    out.f64.resize(n);
    in.read(reinterpret_cast<char*>(out.f64.data()), static_cast<std::streamsize>(n * 8));
  } else {
    out.u8.resize(n);
    in.read(reinterpret_cast<char*>(out.u8.data()), static_cast<std::streamsize>(n));
  }
  if (!in) throw std::runtime_error(path + ": short read");
  return out;
}

// Minimal subset of the NIfTI-1 header; offsets match the standard layout.
struct Nifti1Header {
  std::int32_t sizeof_hdr;      // 0
  char unused0[36];             // 4
  std::int16_t dim[8];          // 40
  char unused1[14];             // 56
  std::int16_t datatype;        // 70
  std::int16_t bitpix;          // 72
  std::int16_t slice_start;     // 74
  float pixdim[8];              // 76
  float vox_offset;             // 108
  float scl_slope;              // 112
  float scl_inter;              // 116
  char unused2[224];            // 120
  char magic[4];                // 344
};
static_assert(sizeof(Nifti1Header) == 348);

Volume load_nifti(const std::string& path) {
  std::ifstream in = open_input(path);
  const std::size_t fsize = file_size(in);

  Nifti1Header hdr{};
  if (fsize < sizeof(hdr)) throw std::runtime_error(path + ": truncated NIfTI header");
  in.read(reinterpret_cast<char*>(&hdr), sizeof(hdr));

  if (hdr.sizeof_hdr != 348) {
    if (hdr.sizeof_hdr == 0x5C010000)  // 348 byte-swapped
      throw std::runtime_error(path + ": byte-swapped NIfTI files are not supported");
    throw std::runtime_error(path + ": not a NIfTI-1 file (sizeof_hdr != 348)");
  }
  if (std::memcmp(hdr.magic, "n+1", 4) != 0)
    throw std::runtime_error(path + ": only single-file NIfTI (magic \"n+1\") is supported");
  if (hdr.dim[0] < 3 || hdr.dim[0] > 7)
    throw std::runtime_error(path + ": dim[0] must be in [3,7], got " + std::to_string(hdr.dim[0]));
  for (int a = 4; a <= hdr.dim[0]; ++a) {
    if (hdr.dim[a] > 1)
      throw std::runtime_error(path + ": multi-volume NIfTI is not supported (dim[" +
                               std::to_string(a) + "] = " + std::to_string(hdr.dim[a]) + ")");
  }

  GridInfo grid;
  grid.dims = {hdr.dim[1], hdr.dim[2], hdr.dim[3]};
  grid.spacing = {hdr.pixdim[1], hdr.pixdim[2], hdr.pixdim[3]};
  check_grid(grid, path);

  int elem = 0;
  switch (hdr.datatype) {
    case 2:   elem = 1; break;  // DT_UINT8
    case 4:   elem = 2; break;  // DT_INT16
    case 8:   elem = 4; break;  // DT_INT32
    case 16:  elem = 4; break;  // DT_FLOAT32
    case 64:  elem = 8; break;  // DT_FLOAT64
    default:
      throw std::runtime_error(path + ": unsupported NIfTI datatype " + std::to_string(hdr.datatype));
  }

  const std::size_t n = grid.voxel_count();
  const auto offset = static_cast<std::size_t>(hdr.vox_offset);
  if (hdr.vox_offset < 348.0f)
    throw std::runtime_error(path + ": vox_offset < 348");
  if (fsize < offset + n * static_cast<std::size_t>(elem))
    throw std::runtime_error(path + ": header/body size mismatch");

  std::vector<char> raw(n * static_cast<std::size_t>(elem));
  in.seekg(static_cast<std::streamoff>(offset), std::ios::beg);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!in) throw std::runtime_error(path + ": short read");

  const double slope = (hdr.scl_slope == 0.0f) ? 1.0 : static_cast<double>(hdr.scl_slope);
  const double inter = static_cast<double>(hdr.scl_inter);

  Volume vol(grid);
  auto& out = vol.data();
  const char* p = raw.data();
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    switch (hdr.datatype) {
      case 2: {
        std::uint8_t t;
        std::memcpy(&t, p + i, 1);
        v = t;
        break;
      }
      case 4: {
        std::int16_t t;
        std::memcpy(&t, p + 2 * i, 2);
        v = t;
        break;
      }
      case 8: {
        std::int32_t t;
        std::memcpy(&t, p + 4 * i, 4);
        v = t;
        break;
      }
      case 16: {
        float t;
        std::memcpy(&t, p + 4 * i, 4);
        v = t;
        break;
      }
      case 64: {
        std::memcpy(&v, p + 8 * i, 8);
        break;
      }
    }
    out[i] = v * slope + inter;
  }
  check_finite(out, path);
  return vol;
}

void write_native(const GridInfo& grid, std::uint8_t dtype, const void* payload,
                  std::size_t payload_bytes, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");

  NativeHeader hdr{};
  std::memcpy(hdr.magic, kMagic, sizeof(kMagic));
  hdr.version = kVersion;
  hdr.nx = static_cast<std::uint32_t>(grid.dims[0]);
  hdr.ny = static_cast<std::uint32_t>(grid.dims[1]);
  hdr.nz = static_cast<std::uint32_t>(grid.dims[2]);
  hdr.sx = grid.spacing[0];
  hdr.sy = grid.spacing[1];
  hdr.sz = grid.spacing[2];

  out.write(reinterpret_cast<const char*>(&hdr), sizeof(hdr));
  out.write(reinterpret_cast<const char*>(&dtype), 1);
  out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

Volume::Volume(GridInfo grid, double fill) : grid_(grid), data_(grid.voxel_count(), fill) {}

LabelMask::LabelMask(GridInfo grid, std::uint8_t fill) : grid_(grid), data_(grid.voxel_count(), fill) {}

std::size_t LabelMask::foreground_count() const {
  std::size_t n = 0;
  for (std::uint8_t v : data_) n += (v != 0);
  return n;
}

Volume load_volume(const std::string& path) {
  std::ifstream probe = open_input(path);
  if (has_native_magic(probe)) {
    probe.close();
    NativePayload p = load_native(path);
    Volume vol(p.grid);
    if (p.dtype == kDtypeF64) {
      vol.data() = std::move(p.f64);
    } else {
      for (std::size_t i = 0; i < p.u8.size(); ++i) vol.data()[i] = p.u8[i];
    }
    check_finite(vol.data(), path);
    return vol;
  }
  probe.close();
  return load_nifti(path);
}

LabelMask load_mask(const std::string& path) {
  std::ifstream probe = open_input(path);
  const bool native = has_native_magic(probe);
  probe.close();

  if (native) {
    NativePayload p = load_native(path);
    if (p.dtype != kDtypeU8) throw std::runtime_error(path + ": not a label mask (datatype tag is f64)");
    LabelMask mask(p.grid);
    for (std::size_t i = 0; i < p.u8.size(); ++i) {
      if (p.u8[i] > 1) throw std::runtime_error(path + ": mask value out of {0,1}");
      mask.data()[i] = p.u8[i];
    }
    return mask;
  }

  // NIfTI masks are accepted when every value is exactly 0 or 1.
  Volume vol = load_nifti(path);
  LabelMask mask(vol.grid());
  for (std::size_t i = 0; i < vol.size(); ++i) {
    if (vol[i] == 0.0) {
      mask[i] = 0;
    } else if (vol[i] == 1.0) {
      mask[i] = 1;
    } else {
      throw std::runtime_error(path + ": mask value out of {0,1}");
    }
  }
  return mask;
}

void save_volume(const Volume& vol, const std::string& path) {
  write_native(vol.grid(), kDtypeF64, vol.data().data(), vol.size() * 8, path);
}

void save_volume(const LabelMask& mask, const std::string& path) {
  write_native(mask.grid(), kDtypeU8, mask.data().data(), mask.size(), path);
}

Volume zscore_normalize(const Volume& vol) {
  const std::size_t n = vol.size();
  if (n == 0) throw std::invalid_argument("zscore_normalize: empty volume");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += vol[i];
  mean /= static_cast<double>(n);

  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = vol[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);  // population variance
  if (var == 0.0) throw std::invalid_argument("zscore_normalize: constant volume (zero variance)");

  const double inv_std = 1.0 / std::sqrt(var);
  Volume out(vol.grid());
  for (std::size_t i = 0; i < n; ++i) out[i] = (vol[i] - mean) * inv_std;
  return out;
}

namespace {

template <typename Image>
Image crop_impl(const Image& src, std::array<int, 3> size, std::array<int, 3> center) {
  for (int a = 0; a < 3; ++a) {
    if (size[a] < 1) throw std::invalid_argument("crop_centered: size component < 1");
  }
  GridInfo grid;
  grid.dims = size;
  grid.spacing = src.grid().spacing;
  Image out(grid);

  const std::array<int, 3> off = {center[0] - size[0] / 2, center[1] - size[1] / 2,
                                  center[2] - size[2] / 2};
  for (int z = 0; z < size[2]; ++z) {
    const int sz = z + off[2];
    for (int y = 0; y < size[1]; ++y) {
      const int sy = y + off[1];
      for (int x = 0; x < size[0]; ++x) {
        const int sx = x + off[0];
        if (src.grid().contains(sx, sy, sz)) out.at(x, y, z) = src.at(sx, sy, sz);
      }
    }
  }
  return out;
}

}  // namespace

Volume crop_centered(const Volume& vol, std::array<int, 3> size, std::array<int, 3> center) {
  return crop_impl(vol, size, center);
}

LabelMask crop_centered(const LabelMask& mask, std::array<int, 3> size, std::array<int, 3> center) {
  return crop_impl(mask, size, center);
}

std::array<int, 3> mask_centroid(const LabelMask& mask) {
  double sx = 0.0, sy = 0.0, sz = 0.0;
  std::size_t n = 0;
  const auto& d = mask.dims();
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x)
        if (mask.at(x, y, z)) {
          sx += x;
          sy += y;
          sz += z;
          ++n;
        }
  if (n == 0) throw std::invalid_argument("mask_centroid: empty mask");
  const double inv = 1.0 / static_cast<double>(n);
  return {static_cast<int>(std::lround(sx * inv)), static_cast<int>(std::lround(sy * inv)),
          static_cast<int>(std::lround(sz * inv))};
}

}  // namespace laq
