#include "netpars/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace netpars {

namespace {

constexpr double kProbFloor = 0x1.0p-53;  // keep outputs strictly inside (0,1)

double stable_sigmoid(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Tap offset: output j reads input j - offset.  Causal kernels end at the
// current timepoint; non-causal kernels are centered.
int tap_offset(const LayerShape& layer, bool causal, int q) {
  if (causal) return (layer.kernel - 1 - q) * layer.dilation;
  return ((layer.kernel - 1) / 2 - q) * layer.dilation;
}

// out[o][t] = bias[o] + sum_{ci,q} w[o][ci][q] * in[ci][t - offset(q)],
// zero padding outside [0, t).
void conv_forward(const LayerShape& layer, bool causal, const double* w_flat, const double* in, int t, double* out) {
  const double* weights = w_flat + layer.w_offset;
  const double* bias = w_flat + layer.b_offset;
  for (int o = 0; o < layer.out_ch; ++o) {
    double* out_row = out + static_cast<std::size_t>(o) * t;
    std::fill(out_row, out_row + t, bias[o]);
    for (int ci = 0; ci < layer.in_ch; ++ci) {
      const double* in_row = in + static_cast<std::size_t>(ci) * t;
      for (int q = 0; q < layer.kernel; ++q) {
        const double wq = weights[(static_cast<std::size_t>(o) * layer.in_ch + ci) * layer.kernel + q];
        const int off = tap_offset(layer, causal, q);
        const int lo = std::max(0, off);
        const int hi = std::min(t, t + off);
        for (int j = lo; j < hi; ++j) out_row[j] += wq * in_row[j - off];
      }
    }
  }
}

// Accumulates dL/dw, dL/db and dL/din for one layer given dL/dout.
void conv_backward(const LayerShape& layer, bool causal, const double* w_flat, const double* in, int t,
                   const double* dout, double* grad_flat, double* din) {
  const double* weights = w_flat + layer.w_offset;
  double* dw = grad_flat + layer.w_offset;
  double* db = grad_flat + layer.b_offset;
  for (int o = 0; o < layer.out_ch; ++o) {
    const double* dout_row = dout + static_cast<std::size_t>(o) * t;
    double bias_sum = 0.0;
    for (int j = 0; j < t; ++j) bias_sum += dout_row[j];
    db[o] += bias_sum;
    for (int ci = 0; ci < layer.in_ch; ++ci) {
      const double* in_row = in + static_cast<std::size_t>(ci) * t;
      double* din_row = din ? din + static_cast<std::size_t>(ci) * t : nullptr;
      for (int q = 0; q < layer.kernel; ++q) {
        const std::size_t widx = (static_cast<std::size_t>(o) * layer.in_ch + ci) * layer.kernel + q;
        const double wq = weights[widx];
        const int off = tap_offset(layer, causal, q);
        const int lo = std::max(0, off);
        const int hi = std::min(t, t + off);
        double wsum = 0.0;
        if (din_row) {
          for (int j = lo; j < hi; ++j) {
            wsum += dout_row[j] * in_row[j - off];
            din_row[j - off] += wq * dout_row[j];
          }
        } else {
          for (int j = lo; j < hi; ++j) wsum += dout_row[j] * in_row[j - off];
        }
        dw[widx] += wsum;
      }
    }
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (n_blocks < 1) throw std::invalid_argument("EncoderConfig: n_blocks must be >= 1");
  if (channels < 1) throw std::invalid_argument("EncoderConfig: channels must be >= 1");
  if (kernel_size < 1) throw std::invalid_argument("EncoderConfig: kernel_size must be >= 1");
  if (static_cast<int>(dilations.size()) != n_blocks)
    throw std::invalid_argument("EncoderConfig: dilations length must equal n_blocks");
  for (int d : dilations)
    if (d < 1) throw std::invalid_argument("EncoderConfig: dilations must be >= 1");
  if (init_scale < 0) throw std::invalid_argument("EncoderConfig: init_scale must be >= 0");
}

EncoderParams::EncoderParams(const EncoderConfig& config) : config_(config) {
  config.validate();
  std::size_t offset = 0;
  auto add_layer = [&](int in_ch, int out_ch, int kernel, int dilation) {
    LayerShape layer{in_ch, out_ch, kernel, dilation, offset, 0};
    offset += layer.weight_count();
    layer.b_offset = offset;
    offset += out_ch;
    layers_.push_back(layer);
  };
  for (int b = 0; b < config.n_blocks; ++b)
    add_layer(b == 0 ? 1 : config.channels, config.channels, config.kernel_size, config.dilations[b]);
  add_layer(config.channels, 1, 1, 1);  // projection
  flat_.assign(offset, 0.0);
}

EncoderParams init_params(const EncoderConfig& config, Rng& rng) {
  EncoderParams params(config);
  for (const LayerShape& layer : params.layers()) {
    const double bound = config.init_scale / std::sqrt(static_cast<double>(layer.in_ch) * layer.kernel);
    for (std::size_t i = 0; i < layer.weight_count(); ++i)
      params.flat()[layer.w_offset + i] = bound * (2.0 * rng.next_double() - 1.0);
    // biases stay zero
  }
  return params;
}

ProbMatrix encode(const Matrix<double>& series, const EncoderParams& params, GradientTape* tape) {
  const EncoderConfig& config = params.config();
  if (params.size() == 0) throw std::invalid_argument("encode: uninitialized params");
  if (series.rows() < 1 || series.cols() < 1) throw std::invalid_argument("encode: series must be non-empty");

  const int m = series.rows();
  const int t = series.cols();
  const int ch = config.channels;
  const std::size_t slab = static_cast<std::size_t>(ch) * t;        // one block's activations
  const std::size_t row_slab = slab * config.n_blocks;              // all blocks, one row

  if (tape) {
    tape->recorded_ = true;
    tape->m_ = m;
    tape->t_ = t;
    tape->input_ = series.data();
    tape->preact_.assign(row_slab * m, 0.0);
    tape->probs_.assign(static_cast<std::size_t>(m) * t, 0.0);
  }

  ProbMatrix probs(m, t, 0.0);
  const std::vector<LayerShape>& layers = params.layers();

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int r = 0; r < m; ++r) {
    std::vector<double> cur(series.row(r).begin(), series.row(r).end());
    std::vector<double> z(slab);
    for (int b = 0; b < config.n_blocks; ++b) {
      conv_forward(layers[b], config.causal, params.flat().data(), cur.data(), t, z.data());
      if (tape) std::copy(z.begin(), z.end(), tape->preact_.begin() + r * row_slab + b * slab);
      cur.assign(z.size(), 0.0);
      for (std::size_t i = 0; i < z.size(); ++i) cur[i] = z[i] > 0 ? z[i] : config.leaky_slope * z[i];
    }
    std::vector<double> logits(t);
    conv_forward(layers.back(), config.causal, params.flat().data(), cur.data(), t, logits.data());
    for (int j = 0; j < t; ++j) {
      const double p = std::clamp(stable_sigmoid(logits[j]), kProbFloor, 1.0 - kProbFloor);
      probs(r, j) = p;
      if (tape) tape->probs_[static_cast<std::size_t>(r) * t + j] = p;
    }
  }
  return probs;
}

std::vector<double> encode_backward(const GradientTape& tape, const EncoderParams& params,
                                    const Matrix<double>& grad_probs) {
  if (!tape.recorded()) throw std::logic_error("encode_backward: tape has no recorded forward pass");
  if (grad_probs.rows() != tape.m_ || grad_probs.cols() != tape.t_)
    throw std::invalid_argument("encode_backward: gradient shape does not match recorded forward");

  const EncoderConfig& config = params.config();
  const int m = tape.m_;
  const int t = tape.t_;
  const int ch = config.channels;
  const std::size_t slab = static_cast<std::size_t>(ch) * t;
  const std::size_t row_slab = slab * config.n_blocks;
  const std::vector<LayerShape>& layers = params.layers();

  // Per-row gradient buffers, reduced in row order afterwards.
  std::vector<std::vector<double>> row_grads(m);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int r = 0; r < m; ++r) {
    std::vector<double> grads(params.size(), 0.0);
    const double* zs = tape.preact_.data() + r * row_slab;

    // d loss / d logits through the logistic squash.
    std::vector<double> dcur(t);
    for (int j = 0; j < t; ++j) {
      const double p = tape.probs_[static_cast<std::size_t>(r) * t + j];
      dcur[j] = grad_probs(r, j) * p * (1.0 - p);
    }

    // Projection layer: input is the last block's post-activation.
    std::vector<double> a_last(slab);
    {
      const double* z = zs + (config.n_blocks - 1) * slab;
      for (std::size_t i = 0; i < slab; ++i) a_last[i] = z[i] > 0 ? z[i] : config.leaky_slope * z[i];
    }
    std::vector<double> da(slab, 0.0);
    conv_backward(layers.back(), config.causal, params.flat().data(), a_last.data(), t, dcur.data(), grads.data(),
                  da.data());

    for (int b = config.n_blocks - 1; b >= 0; --b) {
      const LayerShape& layer = layers[b];
      const double* z = zs + b * slab;
      // Through the leaky rectifier.
      std::vector<double> dz(slab);
      for (std::size_t i = 0; i < slab; ++i) dz[i] = da[i] * (z[i] > 0 ? 1.0 : config.leaky_slope);

      const std::size_t in_size = static_cast<std::size_t>(layer.in_ch) * t;
      std::vector<double> a_in(in_size);
      if (b == 0) {
        std::copy(tape.input_.begin() + static_cast<std::size_t>(r) * t,
                  tape.input_.begin() + static_cast<std::size_t>(r + 1) * t, a_in.begin());
      } else {
        const double* zprev = zs + (b - 1) * slab;
        for (std::size_t i = 0; i < in_size; ++i) a_in[i] = zprev[i] > 0 ? zprev[i] : config.leaky_slope * zprev[i];
      }
      std::vector<double> din(in_size, 0.0);
      conv_backward(layer, config.causal, params.flat().data(), a_in.data(), t, dz.data(), grads.data(),
                    b > 0 ? din.data() : nullptr);
      da = std::move(din);
    }
    row_grads[r] = std::move(grads);
  }

  std::vector<double> total(params.size(), 0.0);
  for (int r = 0; r < m; ++r)
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += row_grads[r][i];
  return total;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  const EncoderConfig& c = checkpoint.config;
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["encoder"] = {{"n_blocks", c.n_blocks},         {"channels", c.channels}, {"kernel_size", c.kernel_size},
                  {"dilations", c.dilations},       {"leaky_slope", c.leaky_slope}, {"causal", c.causal},
                  {"init_scale", c.init_scale}};
  j["standardize_inputs"] = checkpoint.standardize_inputs;

  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  const auto& layers = checkpoint.params.layers();
  const auto& flat = checkpoint.params.flat();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerShape& layer = layers[i];
    const std::string name = i + 1 == layers.size() ? "proj" : "block" + std::to_string(i);
    params[name + ".weight"] =
        std::vector<double>(flat.begin() + layer.w_offset, flat.begin() + layer.w_offset + layer.weight_count());
    params[name + ".bias"] =
        std::vector<double>(flat.begin() + layer.b_offset, flat.begin() + layer.b_offset + layer.out_ch);
  }
  j["params"] = params;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("load_checkpoint: " + path + ": " + e.what());
  }
  if (j.at("format_version").get<int>() != 1)
    throw std::runtime_error("load_checkpoint: unsupported format_version in " + path);

  EncoderConfig config;
  const auto& e = j.at("encoder");
  config.n_blocks = e.at("n_blocks").get<int>();
  config.channels = e.at("channels").get<int>();
  config.kernel_size = e.at("kernel_size").get<int>();
  config.dilations = e.at("dilations").get<std::vector<int>>();
  config.leaky_slope = e.at("leaky_slope").get<double>();
  config.causal = e.at("causal").get<bool>();
  config.init_scale = e.at("init_scale").get<double>();

  Checkpoint checkpoint{config, EncoderParams(config), j.at("standardize_inputs").get<bool>()};
  const auto& params = j.at("params");
  const auto& layers = checkpoint.params.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerShape& layer = layers[i];
    const std::string name = i + 1 == layers.size() ? "proj" : "block" + std::to_string(i);
    const auto w = params.at(name + ".weight").get<std::vector<double>>();
    const auto b = params.at(name + ".bias").get<std::vector<double>>();
    if (w.size() != layer.weight_count() || b.size() != static_cast<std::size_t>(layer.out_ch))
      throw std::runtime_error("load_checkpoint: parameter shape mismatch for " + name);
    std::copy(w.begin(), w.end(), checkpoint.params.flat().begin() + layer.w_offset);
    std::copy(b.begin(), b.end(), checkpoint.params.flat().begin() + layer.b_offset);
  }
  return checkpoint;
}

}  // namespace netpars
