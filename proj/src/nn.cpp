#include "laq/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>

#include "laq/rng.hpp"

namespace laq {

namespace {

Tensor tensor_from_volume(const Volume& vol) {
  Tensor t(1, vol.dims());
  std::memcpy(t.v.data(), vol.data().data(), vol.size() * sizeof(double));
  return t;
}

Volume volume_from_channel(const Tensor& t, int c, const GridInfo& grid) {
  Volume v(grid);
  std::memcpy(v.data().data(), t.ch(c), t.spatial() * sizeof(double));
  return v;
}

// Zero-padded copy (one voxel on each side) of every channel.
std::vector<double> pad1(const Tensor& t) {
  const int nx = t.dims[0], ny = t.dims[1], nz = t.dims[2];
  const int px = nx + 2, py = ny + 2, pz = nz + 2;
  const std::size_t ps = static_cast<std::size_t>(px) * py * pz;
  std::vector<double> pad(ps * static_cast<std::size_t>(t.channels), 0.0);
  for (int c = 0; c < t.channels; ++c) {
    const double* src = t.ch(c);
    double* dst = pad.data() + ps * static_cast<std::size_t>(c);
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y)
        std::memcpy(dst + (static_cast<std::size_t>(z + 1) * py + (y + 1)) * px + 1,
                    src + (static_cast<std::size_t>(z) * ny + y) * nx, sizeof(double) * nx);
  }
  return pad;
}

Tensor relu_eval(const Tensor& z) {
  Tensor out(z.channels, z.dims);
  for (std::size_t i = 0; i < z.v.size(); ++i) out.v[i] = z.v[i] > 0.0 ? z.v[i] : 0.0;
  return out;
}

Tensor relu_backprop(const Tensor& z, const Tensor& gout) {
  Tensor gin(z.channels, z.dims);
  for (std::size_t i = 0; i < z.v.size(); ++i) gin.v[i] = z.v[i] > 0.0 ? gout.v[i] : 0.0;
  return gin;
}

Tensor pool_forward(const Tensor& in, std::vector<std::size_t>& arg) {
  const int nx = in.dims[0], ny = in.dims[1], nz = in.dims[2];
  Tensor out(in.channels, {nx / 2, ny / 2, nz / 2});
  arg.assign(static_cast<std::size_t>(in.channels) * out.spatial(), 0);

  for (int c = 0; c < in.channels; ++c) {
    const double* src = in.ch(c);
    double* dst = out.ch(c);
    std::size_t oi = 0;
    for (int z = 0; z < nz; z += 2)
      for (int y = 0; y < ny; y += 2)
        for (int x = 0; x < nx; x += 2, ++oi) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (int kz = 0; kz < 2; ++kz)
            for (int ky = 0; ky < 2; ++ky)
              for (int kx = 0; kx < 2; ++kx) {
                const std::size_t idx =
                    (static_cast<std::size_t>(z + kz) * ny + (y + ky)) * nx + (x + kx);
                if (src[idx] > best) {  // strict: first maximum wins ties
                  best = src[idx];
                  best_idx = idx;
                }
              }
          dst[oi] = best;
          arg[static_cast<std::size_t>(c) * out.spatial() + oi] = best_idx;
        }
  }
  return out;
}

Tensor pool_backward(const Tensor& gout, const std::vector<std::size_t>& arg,
                     const std::array<int, 3>& in_dims) {
  Tensor gin(gout.channels, in_dims);
  for (int c = 0; c < gout.channels; ++c) {
    const double* src = gout.ch(c);
    double* dst = gin.ch(c);
    const std::size_t base = static_cast<std::size_t>(c) * gout.spatial();
    for (std::size_t i = 0; i < gout.spatial(); ++i) dst[arg[base + i]] += src[i];
  }
  return gin;
}

Tensor upsample(const Tensor& in) {
  const int nx = in.dims[0], ny = in.dims[1], nz = in.dims[2];
  Tensor out(in.channels, {nx * 2, ny * 2, nz * 2});
  for (int c = 0; c < in.channels; ++c) {
    const double* src = in.ch(c);
    double* dst = out.ch(c);
    std::size_t oi = 0;
    for (int z = 0; z < nz * 2; ++z)
      for (int y = 0; y < ny * 2; ++y)
        for (int x = 0; x < nx * 2; ++x, ++oi)
          dst[oi] = src[(static_cast<std::size_t>(z / 2) * ny + (y / 2)) * nx + (x / 2)];
  }
  return out;
}

Tensor upsample_backward(const Tensor& gout) {
  const int nx = gout.dims[0] / 2, ny = gout.dims[1] / 2, nz = gout.dims[2] / 2;
  Tensor gin(gout.channels, {nx, ny, nz});
  for (int c = 0; c < gout.channels; ++c) {
    const double* src = gout.ch(c);
    double* dst = gin.ch(c);
    std::size_t oi = 0;
    for (int z = 0; z < gout.dims[2]; ++z)
      for (int y = 0; y < gout.dims[1]; ++y)
        for (int x = 0; x < gout.dims[0]; ++x, ++oi)
          dst[(static_cast<std::size_t>(z / 2) * ny + (y / 2)) * nx + (x / 2)] += src[oi];
  }
  return gin;
}

Tensor concat(const Tensor& a, const Tensor& b) {
  Tensor out(a.channels + b.channels, a.dims);
  std::memcpy(out.v.data(), a.v.data(), a.v.size() * sizeof(double));
  std::memcpy(out.v.data() + a.v.size(), b.v.data(), b.v.size() * sizeof(double));
  return out;
}

}  // namespace

Network::Conv Network::make_conv(const std::string& name, int in_c, int out_c, int k) {
  Conv c;
  c.in_c = in_c;
  c.out_c = out_c;
  c.k = k;
  const std::size_t w_count = static_cast<std::size_t>(out_c) * in_c * k * k * k;

  c.w = blocks_.empty() ? 0 : blocks_.back().offset + blocks_.back().count;
  blocks_.push_back({name + ".w", c.w, w_count});
  c.b = c.w + w_count;
  blocks_.push_back({name + ".b", c.b, static_cast<std::size_t>(out_c)});
  return c;
}

Network::Network(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.base_channels < 1) throw std::invalid_argument("network: base_channels must be >= 1");
  if (cfg.levels < 1) throw std::invalid_argument("network: levels must be >= 1");
  const int div = 1 << cfg.levels;
  for (int a = 0; a < 3; ++a) {
    if (cfg.input_dims[a] < div || cfg.input_dims[a] % div != 0)
      throw std::invalid_argument("network: input dims must be divisible by 2^levels");
  }

  const int C = cfg.base_channels;
  const int L = cfg.levels;
  auto ch = [C](int level) { return C << level; };

  for (int l = 0; l < L; ++l) {
    const std::string p = "enc" + std::to_string(l);
    Stage s;
    s.a = make_conv(p + ".a", l == 0 ? 1 : ch(l - 1), ch(l), 3);
    s.b = make_conv(p + ".b", ch(l), ch(l), 3);
    enc_.push_back(s);
  }
  bott_.a = make_conv("bott.a", ch(L - 1), ch(L), 3);
  bott_.b = make_conv("bott.b", ch(L), ch(L), 3);

  auto make_decoder = [&](const std::string& p, int head_channels) {
    Decoder d;
    for (int idx = 0; idx < L; ++idx) {
      const int l = L - 1 - idx;
      const std::string q = p + ".l" + std::to_string(l);
      Stage s;
      s.a = make_conv(q + ".a", ch(l + 1) + ch(l), ch(l), 3);
      s.b = make_conv(q + ".b", ch(l), ch(l), 3);
      d.st.push_back(s);
    }
    d.head = make_conv(p + ".head", ch(0), head_channels, 1);
    return d;
  };
  la_ = make_decoder("dec_la", 1);
  scar_ = make_decoder("dec_scar", 2);

  const std::size_t total = blocks_.back().offset + blocks_.back().count;
  theta_.assign(total, 0.0);
  mom_.assign(total, 0.0);

  // Fan-in-scaled uniform init for weights, zero biases. Draw order is the
  // block order, so the parameter vector is a pure function of the seed.
  Rng rng(seed);
  auto init_conv = [&](const Conv& c) {
    const double bound = std::sqrt(6.0 / (static_cast<double>(c.k) * c.k * c.k * c.in_c));
    const std::size_t w_count = static_cast<std::size_t>(c.out_c) * c.in_c * c.k * c.k * c.k;
    for (std::size_t i = 0; i < w_count; ++i) theta_[c.w + i] = rng.uniform(-bound, bound);
  };
  for (auto& s : enc_) {
    init_conv(s.a);
    init_conv(s.b);
  }
  init_conv(bott_.a);
  init_conv(bott_.b);
  for (auto* d : {&la_, &scar_}) {
    for (auto& s : d->st) {
      init_conv(s.a);
      init_conv(s.b);
    }
    init_conv(d->head);
  }

  enc_act_.resize(static_cast<std::size_t>(L));
  pool_arg_.resize(static_cast<std::size_t>(L));
}

namespace {

Tensor conv_eval(int in_c, int out_c, int k, std::size_t w_off, std::size_t b_off,
                 const Tensor& in, const std::vector<double>& theta) {
  Tensor out(out_c, in.dims);
  const int nx = in.dims[0], ny = in.dims[1], nz = in.dims[2];

  if (k == 1) {
    for (int o = 0; o < out_c; ++o) {
      double* dst = out.ch(o);
      const double bias = theta[b_off + static_cast<std::size_t>(o)];
      for (std::size_t i = 0; i < out.spatial(); ++i) dst[i] = bias;
      for (int c = 0; c < in_c; ++c) {
        const double w = theta[w_off + static_cast<std::size_t>(o) * in_c + c];
        const double* src = in.ch(c);
        for (std::size_t i = 0; i < out.spatial(); ++i) dst[i] += w * src[i];
      }
    }
    return out;
  }

  const std::vector<double> pad = pad1(in);
  const int px = nx + 2, py = ny + 2;
  const std::size_t ps = static_cast<std::size_t>(px) * py * (nz + 2);

  for (int o = 0; o < out_c; ++o) {
    double* dst_c = out.ch(o);
    const double bias = theta[b_off + static_cast<std::size_t>(o)];
    for (std::size_t i = 0; i < out.spatial(); ++i) dst_c[i] = bias;

    for (int c = 0; c < in_c; ++c) {
      const double* pc = pad.data() + ps * static_cast<std::size_t>(c);
      const std::size_t wb = w_off + (static_cast<std::size_t>(o) * in_c + c) * 27;
      for (int kz = 0; kz < 3; ++kz)
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            const double w = theta[wb + static_cast<std::size_t>(kz) * 9 + ky * 3 + kx];
            for (int z = 0; z < nz; ++z)
              for (int y = 0; y < ny; ++y) {
                double* dst = dst_c + (static_cast<std::size_t>(z) * ny + y) * nx;
                const double* src =
                    pc + (static_cast<std::size_t>(z + kz) * py + (y + ky)) * px + kx;
                for (int x = 0; x < nx; ++x) dst[x] += w * src[x];
              }
          }
    }
  }
  return out;
}

Tensor conv_backprop(int in_c, int out_c, int k, std::size_t w_off, std::size_t b_off,
                     const Tensor& in, const Tensor& gout, std::vector<double>& g,
                     const std::vector<double>& theta) {
  Tensor gin(in_c, in.dims);
  const int nx = in.dims[0], ny = in.dims[1], nz = in.dims[2];

  for (int o = 0; o < out_c; ++o) {
    const double* go = gout.ch(o);
    double acc = 0.0;
    for (std::size_t i = 0; i < gout.spatial(); ++i) acc += go[i];
    g[b_off + static_cast<std::size_t>(o)] += acc;
  }

  if (k == 1) {
    for (int o = 0; o < out_c; ++o) {
      const double* go = gout.ch(o);
      for (int c = 0; c < in_c; ++c) {
        const double* src = in.ch(c);
        double* gi = gin.ch(c);
        const std::size_t wi = w_off + static_cast<std::size_t>(o) * in_c + c;
        const double w = theta[wi];
        double acc = 0.0;
        for (std::size_t i = 0; i < in.spatial(); ++i) {
          acc += go[i] * src[i];
          gi[i] += w * go[i];
        }
        g[wi] += acc;
      }
    }
    return gin;
  }

  const std::vector<double> pad_in = pad1(in);
  const std::vector<double> pad_g = pad1(gout);
  const int px = nx + 2, py = ny + 2;
  const std::size_t ps = static_cast<std::size_t>(px) * py * (nz + 2);

  for (int o = 0; o < out_c; ++o) {
    const double* go = gout.ch(o);
    const double* gp = pad_g.data() + ps * static_cast<std::size_t>(o);
    for (int c = 0; c < in_c; ++c) {
      const double* pc = pad_in.data() + ps * static_cast<std::size_t>(c);
      double* gi = gin.ch(c);
      const std::size_t wb = w_off + (static_cast<std::size_t>(o) * in_c + c) * 27;
      for (int kz = 0; kz < 3; ++kz)
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx) {
            const std::size_t wi = wb + static_cast<std::size_t>(kz) * 9 + ky * 3 + kx;
            const double w = theta[wi];
            double acc = 0.0;
            for (int z = 0; z < nz; ++z)
              for (int y = 0; y < ny; ++y) {
                const std::size_t row = (static_cast<std::size_t>(z) * ny + y) * nx;
                const double* grow = go + row;
                const double* srow =
                    pc + (static_cast<std::size_t>(z + kz) * py + (y + ky)) * px + kx;
                // Mirrored offsets walk the padded gradient for the input pass.
                const double* gprow =
                    gp + (static_cast<std::size_t>(z + 2 - kz) * py + (y + 2 - ky)) * px + (2 - kx);
                double* girow = gi + row;
                for (int x = 0; x < nx; ++x) {
                  acc += grow[x] * srow[x];
                  girow[x] += w * gprow[x];
                }
              }
            g[wi] += acc;
          }
    }
  }
  return gin;
}

}  // namespace

void Network::stage_forward(Stage& s, Tensor& x) {
  s.a.in = std::move(x);
  s.a.z = conv_eval(s.a.in_c, s.a.out_c, s.a.k, s.a.w, s.a.b, s.a.in, theta_);
  s.b.in = relu_eval(s.a.z);
  s.b.z = conv_eval(s.b.in_c, s.b.out_c, s.b.k, s.b.w, s.b.b, s.b.in, theta_);
  x = relu_eval(s.b.z);
}

Tensor Network::stage_backward(const Stage& s, const Tensor& gout, std::vector<double>& g) const {
  const Tensor gz2 = relu_backprop(s.b.z, gout);
  const Tensor ga = conv_backprop(s.b.in_c, s.b.out_c, s.b.k, s.b.w, s.b.b, s.b.in, gz2, g, theta_);
  const Tensor gz1 = relu_backprop(s.a.z, ga);
  return conv_backprop(s.a.in_c, s.a.out_c, s.a.k, s.a.w, s.a.b, s.a.in, gz1, g, theta_);
}

Tensor Network::decoder_forward(Decoder& d, Tensor cur) {
  const int L = cfg_.levels;
  for (int idx = 0; idx < L; ++idx) {
    const int l = L - 1 - idx;
    Tensor cat = concat(upsample(cur), enc_act_[static_cast<std::size_t>(l)]);
    stage_forward(d.st[static_cast<std::size_t>(idx)], cat);
    cur = std::move(cat);
  }
  d.head.in = std::move(cur);
  d.head.z =
      conv_eval(d.head.in_c, d.head.out_c, d.head.k, d.head.w, d.head.b, d.head.in, theta_);
  d.head_y = Tensor(d.head.out_c, d.head.z.dims);
  for (std::size_t i = 0; i < d.head.z.v.size(); ++i)
    d.head_y.v[i] = 1.0 / (1.0 + std::exp(-d.head.z.v[i]));
  return d.head_y;
}

Tensor Network::decoder_backward(const Decoder& d, const Tensor& gprob, std::vector<double>& g,
                                 std::vector<Tensor>& genc) const {
  Tensor gz(d.head_y.channels, d.head_y.dims);
  for (std::size_t i = 0; i < gz.v.size(); ++i)
    gz.v[i] = gprob.v[i] * d.head_y.v[i] * (1.0 - d.head_y.v[i]);

  Tensor gcur =
      conv_backprop(d.head.in_c, d.head.out_c, d.head.k, d.head.w, d.head.b, d.head.in, gz, g, theta_);

  const int L = cfg_.levels;
  for (int idx = L - 1; idx >= 0; --idx) {
    const int l = L - 1 - idx;
    const Tensor gcat = stage_backward(d.st[static_cast<std::size_t>(idx)], gcur, g);

    const int up_c = gcat.channels - enc_act_[static_cast<std::size_t>(l)].channels;
    Tensor gup(up_c, gcat.dims);
    std::memcpy(gup.v.data(), gcat.v.data(), gup.v.size() * sizeof(double));

    Tensor& ge = genc[static_cast<std::size_t>(l)];
    const double* gskip = gcat.v.data() + gup.v.size();
    for (std::size_t i = 0; i < ge.v.size(); ++i) ge.v[i] += gskip[i];

    gcur = upsample_backward(gup);
  }
  return gcur;
}

Network::Forward Network::forward(const Volume& vol) {
  if (vol.dims() != cfg_.input_dims) throw std::invalid_argument("network: input dims mismatch");

  const int L = cfg_.levels;
  Tensor x = tensor_from_volume(vol);
  for (int l = 0; l < L; ++l) {
    stage_forward(enc_[static_cast<std::size_t>(l)], x);
    enc_act_[static_cast<std::size_t>(l)] = x;
    x = pool_forward(x, pool_arg_[static_cast<std::size_t>(l)]);
  }
  stage_forward(bott_, x);
  bott_act_ = x;

  const Tensor ya = decoder_forward(la_, bott_act_);
  const Tensor pa = decoder_forward(scar_, bott_act_);

  Forward out;
  out.y = volume_from_channel(ya, 0, vol.grid());
  out.p.p_normal = volume_from_channel(pa, 0, vol.grid());
  out.p.p_scar = volume_from_channel(pa, 1, vol.grid());
  return out;
}

std::vector<double> Network::backward(const Volume& grad_y, const Volume& grad_p_normal,
                                      const Volume& grad_p_scar) {
  if (grad_y.dims() != cfg_.input_dims || grad_p_normal.dims() != cfg_.input_dims ||
      grad_p_scar.dims() != cfg_.input_dims)
    throw std::invalid_argument("network: gradient dims mismatch");

  std::vector<double> g(theta_.size(), 0.0);
  const int L = cfg_.levels;

  std::vector<Tensor> genc;
  for (int l = 0; l < L; ++l)
    genc.emplace_back(enc_act_[static_cast<std::size_t>(l)].channels,
                      enc_act_[static_cast<std::size_t>(l)].dims);

  Tensor gla(1, cfg_.input_dims);
  std::memcpy(gla.v.data(), grad_y.data().data(), gla.v.size() * sizeof(double));
  Tensor gsc(2, cfg_.input_dims);
  std::memcpy(gsc.ch(0), grad_p_normal.data().data(), gsc.spatial() * sizeof(double));
  std::memcpy(gsc.ch(1), grad_p_scar.data().data(), gsc.spatial() * sizeof(double));

  Tensor gbott = decoder_backward(la_, gla, g, genc);
  const Tensor gbott2 = decoder_backward(scar_, gsc, g, genc);
  for (std::size_t i = 0; i < gbott.v.size(); ++i) gbott.v[i] += gbott2.v[i];

  Tensor gx = stage_backward(bott_, gbott, g);
  {
    Tensor gpool = pool_backward(gx, pool_arg_[static_cast<std::size_t>(L - 1)],
                                 enc_act_[static_cast<std::size_t>(L - 1)].dims);
    Tensor& ge = genc[static_cast<std::size_t>(L - 1)];
    for (std::size_t i = 0; i < ge.v.size(); ++i) ge.v[i] += gpool.v[i];
  }

  for (int l = L - 1; l >= 0; --l) {
    gx = stage_backward(enc_[static_cast<std::size_t>(l)], genc[static_cast<std::size_t>(l)], g);
    if (l > 0) {
      Tensor gpool = pool_backward(gx, pool_arg_[static_cast<std::size_t>(l - 1)],
                                   enc_act_[static_cast<std::size_t>(l - 1)].dims);
      Tensor& ge = genc[static_cast<std::size_t>(l - 1)];
      for (std::size_t i = 0; i < ge.v.size(); ++i) ge.v[i] += gpool.v[i];
    }
  }
  return g;
}

void Network::zero_block(const std::string& name) {
  for (const auto& b : blocks_) {
    if (b.name == name) {
      std::fill(theta_.begin() + static_cast<std::ptrdiff_t>(b.offset),
                theta_.begin() + static_cast<std::ptrdiff_t>(b.offset + b.count), 0.0);
      return;
    }
  }
  throw std::invalid_argument("network: unknown parameter block " + name);
}

namespace {
constexpr char kCkptMagic[8] = {'L', 'A', 'Q', 'N', 'E', 'T', '0', '1'};
}

void save_checkpoint(const Network& net, long iteration, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);

  const auto& cfg = net.config();
  f.write(kCkptMagic, sizeof(kCkptMagic));
  const std::uint32_t meta[5] = {static_cast<std::uint32_t>(cfg.base_channels),
                                 static_cast<std::uint32_t>(cfg.levels),
                                 static_cast<std::uint32_t>(cfg.input_dims[0]),
                                 static_cast<std::uint32_t>(cfg.input_dims[1]),
                                 static_cast<std::uint32_t>(cfg.input_dims[2])};
  f.write(reinterpret_cast<const char*>(meta), sizeof(meta));
  const std::uint64_t it = static_cast<std::uint64_t>(iteration);
  const std::uint64_t n = net.param_count();
  f.write(reinterpret_cast<const char*>(&it), 8);
  f.write(reinterpret_cast<const char*>(&n), 8);
  f.write(reinterpret_cast<const char*>(net.params().data()), static_cast<std::streamsize>(n * 8));
  f.write(reinterpret_cast<const char*>(net.momentum().data()), static_cast<std::streamsize>(n * 8));
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);

  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw std::runtime_error("load_checkpoint: bad signature in " + path);

  std::uint32_t meta[5];
  std::uint64_t it = 0, n = 0;
  f.read(reinterpret_cast<char*>(meta), sizeof(meta));
  f.read(reinterpret_cast<char*>(&it), 8);
  f.read(reinterpret_cast<char*>(&n), 8);
  if (!f) throw std::runtime_error("load_checkpoint: truncated header in " + path);

  Checkpoint c;
  c.config.base_channels = static_cast<int>(meta[0]);
  c.config.levels = static_cast<int>(meta[1]);
  c.config.input_dims = {static_cast<int>(meta[2]), static_cast<int>(meta[3]),
                         static_cast<int>(meta[4])};
  c.iteration = static_cast<long>(it);
  c.theta.resize(n);
  c.momentum.resize(n);
  f.read(reinterpret_cast<char*>(c.theta.data()), static_cast<std::streamsize>(n * 8));
  f.read(reinterpret_cast<char*>(c.momentum.data()), static_cast<std::streamsize>(n * 8));
  if (!f) throw std::runtime_error("load_checkpoint: truncated payload in " + path);
  return c;
}

Network restore_network(const Checkpoint& ckpt) {
  Network net(ckpt.config, 0);
  if (net.param_count() != ckpt.theta.size())
    throw std::runtime_error("restore_network: parameter count mismatch");
  net.params() = ckpt.theta;
  net.momentum() = ckpt.momentum;
  return net;
}

}  // namespace laq
