#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "laq/rng.hpp"
#include "laq/volume.hpp"

using namespace laq;

namespace {

std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Minimal uncompressed NIfTI-1 writer for reader tests only.
void write_nifti(const std::string& path, std::array<int, 3> dims, std::array<float, 3> sp,
                 std::int16_t datatype, float slope, float inter,
                 const std::vector<char>& payload) {
  std::vector<char> hdr(352, 0);
  auto put32 = [&](std::size_t off, std::int32_t v) { std::memcpy(hdr.data() + off, &v, 4); };
  auto put16 = [&](std::size_t off, std::int16_t v) { std::memcpy(hdr.data() + off, &v, 2); };
  auto putf = [&](std::size_t off, float v) { std::memcpy(hdr.data() + off, &v, 4); };
  put32(0, 348);
  put16(40, 3);  // dim[0]
  put16(42, static_cast<std::int16_t>(dims[0]));
  put16(44, static_cast<std::int16_t>(dims[1]));
  put16(46, static_cast<std::int16_t>(dims[2]));
  put16(48, 1);
  put16(50, 1);
  put16(52, 1);
  put16(54, 1);
  put16(70, datatype);
  putf(80, 1.0f);  // pixdim[0]
  putf(84, sp[0]);
  putf(88, sp[1]);
  putf(92, sp[2]);
  putf(108, 352.0f);  // vox_offset
  putf(112, slope);
  putf(116, inter);
  hdr[344] = 'n';
  hdr[345] = '+';
  hdr[346] = '1';
  hdr[347] = '\0';
  std::ofstream out(path, std::ios::binary);
  out.write(hdr.data(), 352);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

}  // namespace

TEST_CASE("native volume round trip") {
  GridInfo g{{4, 4, 4}, {1.0, 1.0, 1.0}};
  Volume v(g);
  const std::string path = tmp_path("laq_rt.lqv");

  SUBCASE("all zeros") {
    save_volume(v, path);
    Volume r = load_volume(path);
    REQUIRE(r.size() == 64);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i] == 0.0);
    CHECK(r.spacing()[0] == 1.0);
  }

  SUBCASE("random payload bit-exact") {
    Rng rng(11);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.normal();
    save_volume(v, path);
    Volume r = load_volume(path);
    REQUIRE(r.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(r[i] == v[i]);
  }
}

TEST_CASE("mask round trip") {
  GridInfo g{{3, 4, 5}, {1.0, 2.0, 3.0}};
  LabelMask m(g);
  const std::string path = tmp_path("laq_mask.lqv");

  SUBCASE("empty mask") {
    save_volume(m, path);
    LabelMask r = load_mask(path);
    CHECK(r.empty());
    CHECK(r.dims()[2] == 5);
    CHECK(r.spacing()[1] == 2.0);
  }

  SUBCASE("single voxel keeps its index") {
    m.at(1, 2, 3) = 1;
    save_volume(m, path);
    LabelMask r = load_mask(path);
    CHECK(r.foreground_count() == 1);
    CHECK(r.at(1, 2, 3) == 1);
  }
}

TEST_CASE("nifti reader applies slope and intercept") {
  const std::string path = tmp_path("laq_scaled.nii");
  std::vector<char> payload(2 * 8, 0);
  std::int16_t vals[8] = {3, 3, 3, 3, 3, 3, 3, 3};
  std::memcpy(payload.data(), vals, sizeof vals);
  write_nifti(path, {2, 2, 2}, {1.f, 1.f, 1.f}, 4 /*int16*/, 2.0f, 1.0f, payload);
  Volume v = load_volume(path);
  REQUIRE(v.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(v[i] == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(v.dims()[0] == 2);
}

TEST_CASE("nifti reader rejects junk") {
  const std::string path = tmp_path("laq_bad.nii");
  std::ofstream(path, std::ios::binary) << "not a nifti file at all";
  CHECK_THROWS(load_volume(path));
}

TEST_CASE("zscore normalization") {
  GridInfo g{{2, 1, 1}, {1.0, 1.0, 1.0}};

  SUBCASE("two-point symmetry") {
    Volume v(g);
    v[0] = 0.0;
    v[1] = 2.0;
    Volume n = zscore_normalize(v);
    CHECK(n[0] == doctest::Approx(-1.0));
    CHECK(n[1] == doctest::Approx(1.0));
  }

  SUBCASE("constant volume throws") {
    Volume v(g, 1.0);
    CHECK_THROWS(zscore_normalize(v));
  }

  SUBCASE("random volume matches two-pass moments") {
    GridInfo g6{{6, 6, 6}, {1.0, 1.0, 1.0}};
    Volume v(g6);
    Rng rng(5);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.uniform(-3.0, 9.0);
    double mean = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) mean += v[i];
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) var += (v[i] - mean) * (v[i] - mean);
    var /= static_cast<double>(v.size());
    const double sd = std::sqrt(var);
    Volume n = zscore_normalize(v);
    for (std::size_t i = 0; i < v.size(); ++i)
      CHECK(n[i] == doctest::Approx((v[i] - mean) / sd).epsilon(1e-12));
  }
}

TEST_CASE("centered crop") {
  GridInfo g{{4, 4, 4}, {1.0, 1.0, 1.0}};

  SUBCASE("identity crop") {
    Volume v(g);
    Rng rng(3);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.uniform01();
    Volume c = crop_centered(v, {4, 4, 4}, {2, 2, 2});
    REQUIRE(c.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(c[i] == v[i]);
  }

  SUBCASE("interior crop of a constant volume") {
    Volume v(g, 5.0);
    Volume c = crop_centered(v, {2, 2, 2}, {2, 2, 2});
    REQUIRE(c.size() == 8);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == 5.0);
  }

  SUBCASE("corner crop pads zeros exactly at out-of-range sources") {
    Volume v(g);
    for (int z = 0; z < 4; ++z)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) v.at(x, y, z) = 1 + x + 10 * y + 100 * z;
    Volume c = crop_centered(v, {4, 4, 4}, {0, 0, 0});
    // output o maps to source o + center - size/2 = o - 2 per axis
    for (int z = 0; z < 4; ++z)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
          if (x < 2 || y < 2 || z < 2)
            CHECK(c.at(x, y, z) == 0.0);
          else
            CHECK(c.at(x, y, z) == v.at(x - 2, y - 2, z - 2));
        }
  }
}

TEST_CASE("mask centroid") {
  GridInfo g{{8, 8, 8}, {1.0, 1.0, 1.0}};

  SUBCASE("single voxel") {
    LabelMask m(g);
    m.at(3, 4, 5) = 1;
    auto c = mask_centroid(m);
    CHECK(c == std::array<int, 3>{3, 4, 5});
  }

  SUBCASE("midpoint of two voxels") {
    LabelMask m(g);
    m.at(0, 0, 0) = 1;
    m.at(2, 0, 0) = 1;
    auto c = mask_centroid(m);
    CHECK(c == std::array<int, 3>{1, 0, 0});
  }

  SUBCASE("random blob matches coordinate average") {
    LabelMask m(g);
    Rng rng(17);
    long sx = 0, sy = 0, sz = 0;
    int n = 0;
    while (n < 50) {
      const int x = static_cast<int>(rng.uniform_int(0, 7));
      const int y = static_cast<int>(rng.uniform_int(0, 7));
      const int z = static_cast<int>(rng.uniform_int(0, 7));
      if (m.at(x, y, z)) continue;
      m.at(x, y, z) = 1;
      sx += x;
      sy += y;
      sz += z;
      ++n;
    }
    auto c = mask_centroid(m);
    CHECK(c[0] == static_cast<int>(std::lround(static_cast<double>(sx) / n)));
    CHECK(c[1] == static_cast<int>(std::lround(static_cast<double>(sy) / n)));
    CHECK(c[2] == static_cast<int>(std::lround(static_cast<double>(sz) / n)));
  }

  SUBCASE("empty mask throws") {
    LabelMask m(g);
    CHECK_THROWS(mask_centroid(m));
  }
}
