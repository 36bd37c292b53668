#ifndef LAQ_NN_HPP
#define LAQ_NN_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "laq/volume.hpp"

namespace laq {

// Channel-major activation block over a voxel grid.
struct Tensor {
  int channels = 0;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<double> v;

  Tensor() = default;
  Tensor(int c, std::array<int, 3> d)
      : channels(c),
        dims(d),
        v(static_cast<std::size_t>(c) * static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) *
              static_cast<std::size_t>(d[2]),
          0.0) {}

  std::size_t spatial() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  double* ch(int c) { return v.data() + static_cast<std::size_t>(c) * spatial(); }
  const double* ch(int c) const { return v.data() + static_cast<std::size_t>(c) * spatial(); }
};

struct NetworkConfig {
  std::array<int, 3> input_dims{16, 16, 16};
  int base_channels = 8;  // doubles per level
  int levels = 2;         // pooling steps between full resolution and the bottleneck
};

// Contiguous slice of the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t count = 0;
};

// Shared encoder, two decoders with skip connections into both, logistic
// heads: one cavity channel, two scar-probability channels. 3^3 same-padding
// convolutions with rectifier activations, 2^3 max pooling, nearest-neighbor
// upsampling. Forward caches everything backward needs; backward returns
// exact reverse-mode gradients for the flat parameter vector.
class Network {
 public:
  Network(const NetworkConfig& cfg, std::uint64_t seed);

  struct Forward {
    Volume y;
    ProbabilityPair p;
  };

  Forward forward(const Volume& vol);
  std::vector<double> backward(const Volume& grad_y, const Volume& grad_p_normal,
                               const Volume& grad_p_scar);

  const NetworkConfig& config() const { return cfg_; }
  const std::vector<ParamBlock>& layout() const { return blocks_; }
  std::size_t param_count() const { return theta_.size(); }
  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }
  std::vector<double>& momentum() { return mom_; }
  const std::vector<double>& momentum() const { return mom_; }

  // Zeroes one named block (test hook for the logistic(0) = 0.5 contract).
  void zero_block(const std::string& name);

 private:
  struct Conv {
    int in_c = 0, out_c = 0, k = 3;
    std::size_t w = 0, b = 0;
    Tensor in, z;
  };
  struct Stage {
    Conv a, b;
  };
  struct Decoder {
    std::vector<Stage> st;  // processing order: coarsest level first
    Conv head;
    Tensor head_y;
  };

  Conv make_conv(const std::string& name, int in_c, int out_c, int k);
  void stage_forward(Stage& s, Tensor& x);
  Tensor stage_backward(const Stage& s, const Tensor& gout, std::vector<double>& g) const;
  Tensor decoder_forward(Decoder& d, Tensor cur);
  Tensor decoder_backward(const Decoder& d, const Tensor& gprob, std::vector<double>& g,
                          std::vector<Tensor>& genc) const;

  NetworkConfig cfg_;
  std::vector<double> theta_, mom_;
  std::vector<ParamBlock> blocks_;

  std::vector<Stage> enc_;
  Stage bott_;
  Decoder la_, scar_;

  std::vector<Tensor> enc_act_;
  std::vector<std::vector<std::size_t>> pool_arg_;
  Tensor bott_act_;
};

struct Checkpoint {
  NetworkConfig config;
  long iteration = 0;
  std::vector<double> theta;
  std::vector<double> momentum;
};

// Versioned binary layout documented in docs/file_formats.md.
void save_checkpoint(const Network& net, long iteration, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
Network restore_network(const Checkpoint& ckpt);

}  // namespace laq

#endif
