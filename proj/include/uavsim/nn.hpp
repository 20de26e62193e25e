#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "uavsim/rng.hpp"

namespace uavsim::nn {

// Row-major dense matrix of 64-bit floats. Double precision throughout:
// gradient checks and bitwise-reproducible runs matter more than speed at
// this scale.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  static Matrix zeros(int rows, int cols) {
    return {rows, cols, std::vector<double>(static_cast<size_t>(rows) * cols, 0.0)};
  }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

enum class Activation : uint8_t { ReLU = 0, Identity = 1, Softmax = 2 };

struct DenseLayer {
  Matrix w;               // fan_out x fan_in
  std::vector<double> b;  // fan_out
  Activation act = Activation::Identity;

  int fan_in() const { return w.cols; }
  int fan_out() const { return w.rows; }
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().fan_in(); }
  int output_dim() const { return layers.empty() ? 0 : layers.back().fan_out(); }

  // Consecutive dims must chain; Softmax only allowed on the final layer;
  // all entries finite. Throws std::invalid_argument.
  void validate() const;
};

struct LayerGrad {
  Matrix w;
  std::vector<double> b;
};

struct MlpGrads {
  std::vector<LayerGrad> layers;

  static MlpGrads zeros_like(const MlpParams& p);
  void zero();
};

// Per-layer inputs and pre-activations captured during forward, consumed by
// backward. Reusable across calls to avoid reallocation.
struct ForwardCache {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> preacts;
  std::vector<double> output;
};

// out = W x + b
void affine(const DenseLayer& l, std::span<const double> x, std::vector<double>& out);

void softmax_inplace(std::vector<double>& v);
void relu_inplace(std::vector<double>& v);

// Full forward pass; the cache holds everything backward needs.
// Throws std::invalid_argument on an input-width mismatch.
const std::vector<double>& forward(const MlpParams& p, std::span<const double> x,
                                   ForwardCache& cache);
std::vector<double> forward(const MlpParams& p, std::span<const double> x);

// Reverse-mode gradients for every weight and bias, accumulated into
// `grads` (callers zero it when they want fresh gradients). `upstream` is
// dL/d(output); with `upstream_wrt_logits` set and a Softmax final layer it
// is interpreted as dL/d(final pre-activation) instead, which is the
// numerically sound route for log-likelihood objectives. If `dx` is
// non-null it receives dL/d(input).
void backward(const MlpParams& p, const ForwardCache& cache,
              std::span<const double> upstream, MlpGrads& grads,
              std::vector<double>* dx = nullptr, bool upstream_wrt_logits = false);

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamLayerState {
  Matrix m_w, v_w;
  std::vector<double> m_b, v_b;
};

struct AdamState {
  AdamHyper hyper;
  long long t = 0;
  std::vector<AdamLayerState> layers;

  static AdamState for_params(const MlpParams& p, const AdamHyper& hyper = {});
};

// Bias-corrected Adam update for one layer at step t (t >= 1).
void adam_update_layer(DenseLayer& l, const LayerGrad& g, AdamLayerState& s,
                       const AdamHyper& h, long long t);

// One optimizer step over the whole net. Shapes must match.
void adam_step(MlpParams& p, const MlpGrads& g, AdamState& s);

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)); deterministic per
// seed. fan_out = rows, fan_in = cols.
Matrix xavier_init(int rows, int cols, Rng& rng);

// dims = {in, h1, ..., out}; hidden layers get `hidden` activation, the
// final layer gets `output`. Biases zero.
MlpParams make_mlp(const std::vector<int>& dims, Activation hidden,
                   Activation output, Rng& rng);

// Forward cost convention: 2*fan_in*fan_out + fan_out per dense layer, plus
// 1 op per ReLU unit and 3 per Softmax unit. Fixed so counts are comparable
// across policies.
long long layer_flops(int fan_in, int fan_out, Activation act);
long long flops_count(const MlpParams& p);

// Binary little-endian serialization; round-trips bitwise.
void write_mlp(std::ostream& out, const MlpParams& p);
MlpParams read_mlp(std::istream& in);
void write_layer(std::ostream& out, const DenseLayer& l);
DenseLayer read_layer(std::istream& in);

}  // namespace uavsim::nn
