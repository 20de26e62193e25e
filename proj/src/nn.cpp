#include "uavsim/nn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace uavsim::nn {

void MlpParams::validate() const {
  if (layers.empty()) throw std::invalid_argument("mlp: no layers");
  for (size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& l = layers[i];
    if (l.w.rows <= 0 || l.w.cols <= 0) throw std::invalid_argument("mlp: empty layer");
    if (l.w.data.size() != static_cast<size_t>(l.w.rows) * l.w.cols) {
      throw std::invalid_argument("mlp: weight size mismatch");
    }
    if (l.b.size() != static_cast<size_t>(l.w.rows)) {
      throw std::invalid_argument("mlp: bias size mismatch");
    }
    if (i > 0 && l.fan_in() != layers[i - 1].fan_out()) {
      throw std::invalid_argument("mlp: layer dims do not chain");
    }
    if (l.act == Activation::Softmax && i + 1 != layers.size()) {
      throw std::invalid_argument("mlp: softmax only allowed on the final layer");
    }
    for (double v : l.w.data) {
      if (!std::isfinite(v)) throw std::invalid_argument("mlp: non-finite weight");
    }
    for (double v : l.b) {
      if (!std::isfinite(v)) throw std::invalid_argument("mlp: non-finite bias");
    }
  }
}

MlpGrads MlpGrads::zeros_like(const MlpParams& p) {
  MlpGrads g;
  g.layers.reserve(p.layers.size());
  for (const DenseLayer& l : p.layers) {
    g.layers.push_back({Matrix::zeros(l.w.rows, l.w.cols),
                        std::vector<double>(l.b.size(), 0.0)});
  }
  return g;
}

void MlpGrads::zero() {
  for (LayerGrad& l : layers) {
    std::fill(l.w.data.begin(), l.w.data.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
}

void affine(const DenseLayer& l, std::span<const double> x, std::vector<double>& out) {
  const int rows = l.w.rows;
  const int cols = l.w.cols;
  out.resize(rows);
  const double* w = l.w.data.data();
  for (int r = 0; r < rows; ++r) {
    const double* wr = w + static_cast<size_t>(r) * cols;
    double acc = l.b[r];
    for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
    out[r] = acc;
  }
}

void softmax_inplace(std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

void relu_inplace(std::vector<double>& v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

static void apply_activation(Activation act, std::vector<double>& v) {
  switch (act) {
    case Activation::ReLU: relu_inplace(v); break;
    case Activation::Softmax: softmax_inplace(v); break;
    case Activation::Identity: break;
  }
}

const std::vector<double>& forward(const MlpParams& p, std::span<const double> x,
                                   ForwardCache& cache) {
  if (p.layers.empty()) throw std::invalid_argument("forward: no layers");
  if (static_cast<int>(x.size()) != p.input_dim()) {
    throw std::invalid_argument("forward: input width mismatch");
  }
  const size_t n = p.layers.size();
  cache.inputs.resize(n);
  cache.preacts.resize(n);
  cache.inputs[0].assign(x.begin(), x.end());
  for (size_t i = 0; i < n; ++i) {
    affine(p.layers[i], cache.inputs[i], cache.preacts[i]);
    std::vector<double>& out = (i + 1 < n) ? cache.inputs[i + 1] : cache.output;
    out = cache.preacts[i];
    apply_activation(p.layers[i].act, out);
  }
  return cache.output;
}

std::vector<double> forward(const MlpParams& p, std::span<const double> x) {
  ForwardCache cache;
  forward(p, x, cache);
  return cache.output;
}

void backward(const MlpParams& p, const ForwardCache& cache,
              std::span<const double> upstream, MlpGrads& grads,
              std::vector<double>* dx, bool upstream_wrt_logits) {
  const size_t n = p.layers.size();
  if (grads.layers.size() != n) throw std::invalid_argument("backward: grad shape mismatch");
  std::vector<double> g(upstream.begin(), upstream.end());
  std::vector<double> dz;
  std::vector<double> g_prev;
  for (size_t idx = n; idx-- > 0;) {
    const DenseLayer& l = p.layers[idx];
    const std::vector<double>& z = cache.preacts[idx];
    const std::vector<double>& in = cache.inputs[idx];
    if (static_cast<int>(g.size()) != l.fan_out()) {
      throw std::invalid_argument("backward: upstream width mismatch");
    }
    dz.resize(g.size());
    if (idx + 1 == n && upstream_wrt_logits) {
      dz = g;
    } else {
      switch (l.act) {
        case Activation::ReLU:
          for (size_t i = 0; i < g.size(); ++i) dz[i] = z[i] > 0.0 ? g[i] : 0.0;
          break;
        case Activation::Identity:
          dz = g;
          break;
        case Activation::Softmax: {
          // ds/dz with s = softmax(z): dz = s (.) (g - <g, s>)
          const std::vector<double>& s = cache.output;
          double gs = 0.0;
          for (size_t i = 0; i < g.size(); ++i) gs += g[i] * s[i];
          for (size_t i = 0; i < g.size(); ++i) dz[i] = s[i] * (g[i] - gs);
          break;
        }
      }
    }
    LayerGrad& lg = grads.layers[idx];
    const int rows = l.w.rows;
    const int cols = l.w.cols;
    for (int r = 0; r < rows; ++r) {
      double* gw = lg.w.data.data() + static_cast<size_t>(r) * cols;
      const double d = dz[r];
      for (int c = 0; c < cols; ++c) gw[c] += d * in[c];
      lg.b[r] += d;
    }
    const bool need_dx = idx > 0 || dx != nullptr;
    if (need_dx) {
      g_prev.assign(cols, 0.0);
      for (int r = 0; r < rows; ++r) {
        const double* wr = l.w.data.data() + static_cast<size_t>(r) * cols;
        const double d = dz[r];
        for (int c = 0; c < cols; ++c) g_prev[c] += wr[c] * d;
      }
      g.swap(g_prev);
    }
  }
  if (dx != nullptr) *dx = g;
}

AdamState AdamState::for_params(const MlpParams& p, const AdamHyper& hyper) {
  AdamState s;
  s.hyper = hyper;
  s.layers.reserve(p.layers.size());
  for (const DenseLayer& l : p.layers) {
    s.layers.push_back({Matrix::zeros(l.w.rows, l.w.cols),
                        Matrix::zeros(l.w.rows, l.w.cols),
                        std::vector<double>(l.b.size(), 0.0),
                        std::vector<double>(l.b.size(), 0.0)});
  }
  return s;
}

static void adam_update_span(std::span<double> p, std::span<const double> g,
                             std::span<double> m, std::span<double> v,
                             const AdamHyper& h, long long t) {
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  for (size_t i = 0; i < p.size(); ++i) {
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
  }
}

void adam_update_layer(DenseLayer& l, const LayerGrad& g, AdamLayerState& s,
                       const AdamHyper& h, long long t) {
  if (g.w.data.size() != l.w.data.size() || g.b.size() != l.b.size()) {
    throw std::invalid_argument("adam: gradient shape mismatch");
  }
  adam_update_span(l.w.data, g.w.data, s.m_w.data, s.v_w.data, h, t);
  adam_update_span(l.b, g.b, s.m_b, s.v_b, h, t);
}

void adam_step(MlpParams& p, const MlpGrads& g, AdamState& s) {
  if (g.layers.size() != p.layers.size() || s.layers.size() != p.layers.size()) {
    throw std::invalid_argument("adam: layer count mismatch");
  }
  ++s.t;
  for (size_t i = 0; i < p.layers.size(); ++i) {
    adam_update_layer(p.layers[i], g.layers[i], s.layers[i], s.hyper, s.t);
  }
}

Matrix xavier_init(int rows, int cols, Rng& rng) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("xavier: dims must be > 0");
  Matrix m = Matrix::zeros(rows, cols);
  const double bound = std::sqrt(6.0 / (rows + cols));
  for (double& v : m.data) v = rng.uniform(-bound, bound);
  return m;
}

MlpParams make_mlp(const std::vector<int>& dims, Activation hidden,
                   Activation output, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("make_mlp: need at least 2 dims");
  MlpParams p;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer l;
    l.w = xavier_init(dims[i + 1], dims[i], rng);
    l.b.assign(dims[i + 1], 0.0);
    l.act = (i + 2 == dims.size()) ? output : hidden;
    p.layers.push_back(std::move(l));
  }
  return p;
}

long long layer_flops(int fan_in, int fan_out, Activation act) {
  long long f = 2ll * fan_in * fan_out + fan_out;
  switch (act) {
    case Activation::ReLU: f += fan_out; break;
    case Activation::Softmax: f += 3ll * fan_out; break;
    case Activation::Identity: break;
  }
  return f;
}

long long flops_count(const MlpParams& p) {
  long long total = 0;
  for (const DenseLayer& l : p.layers) total += layer_flops(l.fan_in(), l.fan_out(), l.act);
  return total;
}

namespace {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("mlp read: truncated stream");
  return v;
}

constexpr uint32_t kMaxDim = 1u << 20;

}  // namespace

void write_layer(std::ostream& out, const DenseLayer& l) {
  write_pod<uint32_t>(out, static_cast<uint32_t>(l.w.rows));
  write_pod<uint32_t>(out, static_cast<uint32_t>(l.w.cols));
  write_pod<uint8_t>(out, static_cast<uint8_t>(l.act));
  out.write(reinterpret_cast<const char*>(l.w.data.data()),
            static_cast<std::streamsize>(l.w.data.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(l.b.data()),
            static_cast<std::streamsize>(l.b.size() * sizeof(double)));
}

DenseLayer read_layer(std::istream& in) {
  const uint32_t rows = read_pod<uint32_t>(in);
  const uint32_t cols = read_pod<uint32_t>(in);
  const uint8_t act = read_pod<uint8_t>(in);
  if (rows == 0 || cols == 0 || rows > kMaxDim || cols > kMaxDim || act > 2) {
    throw std::runtime_error("mlp read: bad layer header");
  }
  DenseLayer l;
  l.w = Matrix::zeros(static_cast<int>(rows), static_cast<int>(cols));
  l.b.assign(rows, 0.0);
  l.act = static_cast<Activation>(act);
  in.read(reinterpret_cast<char*>(l.w.data.data()),
          static_cast<std::streamsize>(l.w.data.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(l.b.data()),
          static_cast<std::streamsize>(l.b.size() * sizeof(double)));
  if (!in) throw std::runtime_error("mlp read: truncated stream");
  return l;
}

void write_mlp(std::ostream& out, const MlpParams& p) {
  write_pod<uint32_t>(out, static_cast<uint32_t>(p.layers.size()));
  for (const DenseLayer& l : p.layers) write_layer(out, l);
}

MlpParams read_mlp(std::istream& in) {
  MlpParams p;
  const uint32_t n = read_pod<uint32_t>(in);
  if (n == 0 || n > 1024) throw std::runtime_error("mlp read: bad layer count");
  for (uint32_t i = 0; i < n; ++i) p.layers.push_back(read_layer(in));
  return p;
}

}  // namespace uavsim::nn
