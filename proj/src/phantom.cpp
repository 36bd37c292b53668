#include "laq/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "laq/rng.hpp"
#include "laq/surface.hpp"

namespace laq {

namespace {

struct Vec3 {
  double x, y, z;
};

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

Vec3 unit_direction(Rng& rng) {
  const double zc = rng.uniform(-1.0, 1.0);
  const double th = rng.uniform(0.0, 6.283185307179586476925286766559);
  const double r = std::sqrt(std::max(0.0, 1.0 - zc * zc));
  return {r * std::cos(th), r * std::sin(th), zc};
}

void validate(const PhantomConfig& cfg) {
  for (int a = 0; a < 3; ++a) {
    if (cfg.dims[a] < 8 || cfg.dims[a] % 4 != 0)
      throw std::invalid_argument("phantom: dims must be >= 8 and divisible by 4");
    if (!(cfg.spacing[a] > 0.0)) throw std::invalid_argument("phantom: spacing must be positive");
  }
  if (!(cfg.radius_frac > 0.0)) throw std::invalid_argument("phantom: radius_frac must be positive");
  if (cfg.wall_thickness != 1 && cfg.wall_thickness != 2)
    throw std::invalid_argument("phantom: wall_thickness must be 1 or 2");
  if (cfg.min_scar_patches < 1 || cfg.max_scar_patches < cfg.min_scar_patches)
    throw std::invalid_argument("phantom: bad scar patch range");
  if (!(cfg.scar_fraction_min > 0.0) || !(cfg.scar_fraction_max < 1.0) ||
      cfg.scar_fraction_min > cfg.scar_fraction_max)
    throw std::invalid_argument("phantom: scar fraction range must satisfy 0 < min <= max < 1");
  if (cfg.max_confounders < 0) throw std::invalid_argument("phantom: negative confounder count");
  if (cfg.confounder_margin < 1) throw std::invalid_argument("phantom: confounder margin must be >= 1");
  if (cfg.noise_sigma < 0.0) throw std::invalid_argument("phantom: negative noise sigma");
}

// Cavity as a perturbed ellipsoid in voxel coordinates. Returns an empty
// optional-equivalent (empty mask) when the draw violates the edge margin.
LabelMask draw_cavity(const PhantomConfig& cfg, Rng& rng, const GridInfo& grid) {
  Vec3 center{cfg.dims[0] / 2.0 + rng.uniform(-cfg.dims[0] / 12.0, cfg.dims[0] / 12.0),
              cfg.dims[1] / 2.0 + rng.uniform(-cfg.dims[1] / 12.0, cfg.dims[1] / 12.0),
              cfg.dims[2] / 2.0 + rng.uniform(-cfg.dims[2] / 12.0, cfg.dims[2] / 12.0)};
  Vec3 radius{cfg.radius_frac * cfg.dims[0] * (1.0 + rng.uniform(-cfg.radius_jitter, cfg.radius_jitter)),
              cfg.radius_frac * cfg.dims[1] * (1.0 + rng.uniform(-cfg.radius_jitter, cfg.radius_jitter)),
              cfg.radius_frac * cfg.dims[2] * (1.0 + rng.uniform(-cfg.radius_jitter, cfg.radius_jitter))};
  double c1 = rng.uniform(-1.0, 1.0);
  double c2 = rng.uniform(-1.0, 1.0);
  double c3 = rng.uniform(-1.0, 1.0);
  double c4 = rng.uniform(-1.0, 1.0);

  LabelMask la(grid);
  const int margin = 2;
  bool ok = false;
  for (int z = 0; z < cfg.dims[2]; ++z)
    for (int y = 0; y < cfg.dims[1]; ++y)
      for (int x = 0; x < cfg.dims[0]; ++x) {
        const Vec3 q{(x - center.x) / radius.x, (y - center.y) / radius.y, (z - center.z) / radius.z};
        const double rho = std::sqrt(dot(q, q));
        double bump = 0.0;
        if (rho > 0.0) {
          const Vec3 u{q.x / rho, q.y / rho, q.z / rho};
          bump = cfg.perturb_amp *
                 (c1 * u.x * u.y + c2 * u.y * u.z + c3 * u.z * u.x + c4 * (u.x * u.x - u.y * u.y));
        }
        if (rho <= 1.0 + bump) {
          if (x < margin || y < margin || z < margin || x >= cfg.dims[0] - margin ||
              y >= cfg.dims[1] - margin || z >= cfg.dims[2] - margin)
            return LabelMask(grid);  // touches the edge band, caller retries
          la.at(x, y, z) = 1;
          ok = true;
        }
      }
  if (!ok) return LabelMask(grid);
  return la;
}

LabelMask draw_scar(Rng& rng, const LabelMask& wall, const Vec3& center, int n_patches) {
  LabelMask scar(wall.grid());
  std::vector<Vec3> dirs;
  std::vector<double> cos_width;
  for (int p = 0; p < n_patches; ++p) {
    dirs.push_back(unit_direction(rng));
    cos_width.push_back(std::cos(rng.uniform(0.35, 0.75)));
  }

  const auto& d = wall.dims();
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        if (!wall.at(x, y, z)) continue;
        Vec3 w{x - center.x, y - center.y, z - center.z};
        const double n = std::sqrt(dot(w, w));
        if (n == 0.0) continue;
        w = {w.x / n, w.y / n, w.z / n};
        for (int p = 0; p < n_patches; ++p) {
          if (dot(w, dirs[p]) >= cos_width[p]) {
            scar.at(x, y, z) = 1;
            break;
          }
        }
      }
  return scar;
}

}  // namespace

double scar_mean(const PhantomConfig& cfg) { return cfg.mu_wall + cfg.contrast_k * cfg.contrast_sigma; }

PhantomCase generate_phantom(const PhantomConfig& cfg, std::uint64_t seed) {
  validate(cfg);

  GridInfo grid;
  grid.dims = cfg.dims;
  grid.spacing = cfg.spacing;

  Rng rng(derive_seed(seed, 0xbeef));

  LabelMask la(grid);
  for (int attempt = 0;; ++attempt) {
    la = draw_cavity(cfg, rng, grid);
    if (!la.empty()) break;
    if (attempt >= 50)
      throw std::invalid_argument("phantom: config cannot produce a cavity inside the volume");
  }

  // Cavity centroid anchors the patch geometry.
  const auto cen = mask_centroid(la);
  const Vec3 center{static_cast<double>(cen[0]), static_cast<double>(cen[1]),
                    static_cast<double>(cen[2])};

  const LabelMask boundary = extract_boundary(la);
  LabelMask wall = boundary;
  if (cfg.wall_thickness == 2) {
    // One outward 6-connected layer on top of the boundary.
    const auto& d = grid.dims;
    static constexpr int kSteps[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                         {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
    for (int z = 0; z < d[2]; ++z)
      for (int y = 0; y < d[1]; ++y)
        for (int x = 0; x < d[0]; ++x) {
          if (la.at(x, y, z)) continue;
          for (const auto& s : kSteps) {
            const int nx = x + s[0], ny = y + s[1], nz = z + s[2];
            if (grid.contains(nx, ny, nz) && boundary.at(nx, ny, nz)) {
              wall.at(x, y, z) = 1;
              break;
            }
          }
        }
  }

  const int n_patches =
      static_cast<int>(rng.uniform_int(cfg.min_scar_patches, cfg.max_scar_patches));
  const double n_wall = static_cast<double>(wall.foreground_count());
  LabelMask scar(grid);
  bool hit = false;
  for (int attempt = 0; attempt < 100; ++attempt) {
    scar = draw_scar(rng, wall, center, n_patches);
    const double f = static_cast<double>(scar.foreground_count()) / n_wall;
    if (f >= cfg.scar_fraction_min && f <= cfg.scar_fraction_max) {
      hit = true;
      break;
    }
  }
  if (!hit) throw std::runtime_error("phantom: could not reach the configured scar fraction");

  // Confounders must stay out of the Chebyshev neighborhood of the cavity.
  const LabelMask forbidden = dilate_chebyshev(la, cfg.confounder_margin - 1);
  LabelMask confounder(grid);
  const int n_conf = static_cast<int>(rng.uniform_int(0, cfg.max_confounders));
  for (int c = 0; c < n_conf; ++c) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      const int bx = static_cast<int>(rng.uniform_int(1, cfg.dims[0] - 2));
      const int by = static_cast<int>(rng.uniform_int(1, cfg.dims[1] - 2));
      const int bz = static_cast<int>(rng.uniform_int(1, cfg.dims[2] - 2));
      const int br = static_cast<int>(rng.uniform_int(1, 2));

      bool valid = true;
      for (int dz = -br; dz <= br && valid; ++dz)
        for (int dy = -br; dy <= br && valid; ++dy)
          for (int dx = -br; dx <= br && valid; ++dx) {
            if (dx * dx + dy * dy + dz * dz > br * br) continue;
            const int x = bx + dx, y = by + dy, z = bz + dz;
            if (!grid.contains(x, y, z) || forbidden.at(x, y, z)) valid = false;
          }
      if (!valid) continue;

      for (int dz = -br; dz <= br; ++dz)
        for (int dy = -br; dy <= br; ++dy)
          for (int dx = -br; dx <= br; ++dx) {
            if (dx * dx + dy * dy + dz * dz > br * br) continue;
            confounder.at(bx + dx, by + dy, bz + dz) = 1;
          }
      break;
    }
  }

  const double mu_s = scar_mean(cfg);
  Volume image(grid, cfg.mu_background);
  for (std::size_t i = 0; i < image.size(); ++i) {
    if (scar[i])
      image[i] = mu_s;
    else if (wall[i])
      image[i] = cfg.mu_wall;
    else if (la[i])
      image[i] = cfg.mu_blood_pool;
    else if (confounder[i])
      image[i] = cfg.mu_confounder;
  }
  if (cfg.noise_sigma > 0.0) {
    for (std::size_t i = 0; i < image.size(); ++i) image[i] += cfg.noise_sigma * rng.normal();
  }

  PhantomCase out;
  out.image = std::move(image);
  out.la = std::move(la);
  out.wall = std::move(wall);
  out.scar = std::move(scar);
  return out;
}

DatasetPaths generate_dataset(int n, const PhantomConfig& cfg, std::uint64_t seed,
                              const std::string& dir, const std::string& manifest_extra) {
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");

  std::filesystem::create_directories(dir);
  DatasetPaths out;
  out.dir = dir;

  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "case_%02d", i);
    const std::string cdir = dir + "/" + name;
    std::filesystem::create_directories(cdir);

    const PhantomCase pc = generate_phantom(cfg, seed + static_cast<std::uint64_t>(i));
    save_volume(pc.image, cdir + "/image.lqv");
    save_volume(pc.la, cdir + "/la.lqv");
    save_volume(pc.wall, cdir + "/wall.lqv");
    save_volume(pc.scar, cdir + "/scar.lqv");
    out.case_dirs.push_back(cdir);
  }

  std::ofstream m(dir + "/manifest.txt", std::ios::binary);
  if (!m) throw std::runtime_error("generate_dataset: cannot write manifest");
  char buf[160];
  m << "n=" << n << "\nseed=" << seed << "\n";
  std::snprintf(buf, sizeof buf, "dims=%d,%d,%d\n", cfg.dims[0], cfg.dims[1], cfg.dims[2]);
  m << buf;
  std::snprintf(buf, sizeof buf, "spacing=%.17g,%.17g,%.17g\n", cfg.spacing[0], cfg.spacing[1],
                cfg.spacing[2]);
  m << buf;
  std::snprintf(buf, sizeof buf,
                "radius_frac=%.17g\nradius_jitter=%.17g\nperturb_amp=%.17g\nwall_thickness=%d\n",
                cfg.radius_frac, cfg.radius_jitter, cfg.perturb_amp, cfg.wall_thickness);
  m << buf;
  std::snprintf(buf, sizeof buf, "scar_patches=%d..%d\nscar_fraction=%.17g..%.17g\n",
                cfg.min_scar_patches, cfg.max_scar_patches, cfg.scar_fraction_min,
                cfg.scar_fraction_max);
  m << buf;
  std::snprintf(buf, sizeof buf, "mu=%.17g,%.17g,%.17g,%.17g\ncontrast=%.17g,%.17g\n",
                cfg.mu_background, cfg.mu_blood_pool, cfg.mu_wall, cfg.mu_confounder,
                cfg.contrast_k, cfg.contrast_sigma);
  m << buf;
  std::snprintf(buf, sizeof buf, "max_confounders=%d\nconfounder_margin=%d\nnoise_sigma=%.17g\n",
                cfg.max_confounders, cfg.confounder_margin, cfg.noise_sigma);
  m << buf;
  if (!manifest_extra.empty()) m << manifest_extra << "\n";
  if (!m) throw std::runtime_error("generate_dataset: manifest write failed");
  return out;
}

SplitIndices split_dataset(int n, int k) {
  if (k < 1 || k > n) throw std::invalid_argument("split_dataset: need 1 <= k <= n");
  SplitIndices s;
  for (int i = 0; i < k; ++i) s.train.push_back(i);
  for (int i = k; i < n; ++i) s.test.push_back(i);
  return s;
}

}  // namespace laq
