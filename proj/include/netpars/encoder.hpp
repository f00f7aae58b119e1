#pragma once
// Per-modem event encoder: a stack of dilated 1-d convolutions with leaky
// rectifier activations, a 1-wide projection, and a per-timepoint logistic
// squash.  The same parameters are applied to every modem row.  In causal
// mode convolutions pad on the left only, so output j never sees inputs
// after j.  Forward passes can record a tape for exact reverse-mode
// gradients of a scalar loss with respect to all parameters.

#include <cstdint>
#include <string>
#include <vector>

#include "netpars/matrix.hpp"
#include "netpars/rng.hpp"

namespace netpars {

struct EncoderConfig {
  int n_blocks = 3;
  int channels = 16;
  int kernel_size = 3;
  std::vector<int> dilations = {1, 2, 4};
  double leaky_slope = 0.01;
  bool causal = true;
  double init_scale = 1.0;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

// One convolution layer inside the flat parameter vector.  Weights are
// [out][in][tap] row-major at w_offset, biases [out] at b_offset.
struct LayerShape {
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 0;
  int dilation = 0;
  std::size_t w_offset = 0;
  std::size_t b_offset = 0;
  std::size_t weight_count() const { return static_cast<std::size_t>(in_ch) * out_ch * kernel; }
};

class EncoderParams {
 public:
  EncoderParams() = default;
  explicit EncoderParams(const EncoderConfig& config);  // zero-initialized

  const EncoderConfig& config() const { return config_; }
  // Convolution blocks followed by the final projection layer.
  const std::vector<LayerShape>& layers() const { return layers_; }
  std::vector<double>& flat() { return flat_; }
  const std::vector<double>& flat() const { return flat_; }
  std::size_t size() const { return flat_.size(); }

  bool operator==(const EncoderParams&) const = default;

 private:
  EncoderConfig config_;
  std::vector<LayerShape> layers_;
  std::vector<double> flat_;
};

// Kernels uniform with fan-in scaling (times config.init_scale), biases zero.
EncoderParams init_params(const EncoderConfig& config, Rng& rng);

// Forward-pass record for one encode call.
class GradientTape {
 public:
  bool recorded() const { return recorded_; }

 private:
  friend ProbMatrix encode(const Matrix<double>&, const EncoderParams&, GradientTape*);
  friend std::vector<double> encode_backward(const GradientTape&, const EncoderParams&, const Matrix<double>&);

  bool recorded_ = false;
  int m_ = 0;
  int t_ = 0;
  std::vector<double> input_;   // m x t
  std::vector<double> preact_;  // per row: n_blocks consecutive (channels x t) slabs
  std::vector<double> probs_;   // m x t
};

// Row-independent encode; outputs lie strictly inside (0, 1).
ProbMatrix encode(const Matrix<double>& series, const EncoderParams& params, GradientTape* tape = nullptr);

// Flat parameter gradients given dLoss/dProbMatrix.  Accumulation order is
// fixed (row 0 first), so results are bit-identical across runs.
std::vector<double> encode_backward(const GradientTape& tape, const EncoderParams& params,
                                    const Matrix<double>& grad_probs);

// Everything needed to run a trained encoder.
struct Checkpoint {
  EncoderConfig config;
  EncoderParams params;
  bool standardize_inputs = true;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace netpars
