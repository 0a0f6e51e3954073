#include "hoopnet/seqnet.hpp"

#include <cmath>

#include "hoopnet/errors.hpp"
#include "seqnet_internal.hpp"

namespace hoopnet::seq {
namespace {

void init_uniform_tensor(Matrix& m, std::size_t fan_in, num::SeededRng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
}

void append_lstm_refs(const std::string& prefix, LstmParams& p, std::vector<TensorRef>& out) {
  out.push_back({prefix + ".W_xf", &p.w_xf});
  out.push_back({prefix + ".W_hf", &p.w_hf});
  out.push_back({prefix + ".b_f", &p.b_f});
  out.push_back({prefix + ".W_xi", &p.w_xi});
  out.push_back({prefix + ".W_hi", &p.w_hi});
  out.push_back({prefix + ".b_i", &p.b_i});
  out.push_back({prefix + ".W_xo", &p.w_xo});
  out.push_back({prefix + ".W_ho", &p.w_ho});
  out.push_back({prefix + ".b_o", &p.b_o});
  out.push_back({prefix + ".W_xc", &p.w_xc});
  out.push_back({prefix + ".W_hc", &p.w_hc});
  out.push_back({prefix + ".b_c", &p.b_c});
}

std::size_t lstm_parameter_count(std::size_t in, std::size_t hidden) {
  return 4 * (in * hidden + hidden * hidden + hidden);
}

void check_vector(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw ShapeError(std::string(what) + " has length " + std::to_string(v.size()) +
                     ", expected " + std::to_string(n));
  }
}

// One LSTM cell update. Outputs are written into the spans.
void cell_forward(const LstmParams& p, std::span<const double> x, std::span<const double> h_prev,
                  std::span<const double> c_prev, std::span<double> f, std::span<double> i,
                  std::span<double> o, std::span<double> g, std::span<double> c,
                  std::span<double> tanh_c, std::span<double> h) {
  const std::size_t hidden = p.hidden_dim();
  for (std::size_t k = 0; k < hidden; ++k) {
    f[k] = p.b_f(0, k);
    i[k] = p.b_i(0, k);
    o[k] = p.b_o(0, k);
    g[k] = p.b_c(0, k);
  }
  detail::accumulate_xw(f, x, p.w_xf);
  detail::accumulate_xw(i, x, p.w_xi);
  detail::accumulate_xw(o, x, p.w_xo);
  detail::accumulate_xw(g, x, p.w_xc);
  detail::accumulate_xw(f, h_prev, p.w_hf);
  detail::accumulate_xw(i, h_prev, p.w_hi);
  detail::accumulate_xw(o, h_prev, p.w_ho);
  detail::accumulate_xw(g, h_prev, p.w_hc);
  for (std::size_t k = 0; k < hidden; ++k) {
    f[k] = num::sigmoid(f[k]);
    i[k] = num::sigmoid(i[k]);
    o[k] = num::sigmoid(o[k]);
    g[k] = std::tanh(g[k]);
    c[k] = f[k] * c_prev[k] + i[k] * g[k];
    tanh_c[k] = std::tanh(c[k]);
    h[k] = o[k] * tanh_c[k];
  }
}

void scan_direction(const LstmParams& p, const Matrix& xs, bool forward,
                    detail::DirectionCache& cache) {
  const std::size_t steps = xs.rows();
  const std::size_t hidden = p.hidden_dim();
  cache.resize(steps, hidden);
  const std::vector<double> zeros(hidden, 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = forward ? s : steps - 1 - s;
    std::span<const double> h_prev = zeros;
    std::span<const double> c_prev = zeros;
    if (s > 0) {
      const std::size_t prev = forward ? t - 1 : t + 1;
      h_prev = cache.h.row(prev);
      c_prev = cache.c.row(prev);
    }
    cell_forward(p, xs.row(t), h_prev, c_prev, cache.f.row(t), cache.i.row(t), cache.o.row(t),
                 cache.g.row(t), cache.c.row(t), cache.tanh_c.row(t), cache.h.row(t));
  }
}

void layer_forward(const BlstmLayerParams& p, const Matrix& xs, bool relu,
                   detail::LayerCache& cache) {
  if (xs.cols() != p.forward.input_dim()) {
    throw ShapeError("layer input width " + std::to_string(xs.cols()) + ", expected " +
                     std::to_string(p.forward.input_dim()));
  }
  cache.input = xs;
  cache.relu = relu;
  scan_direction(p.forward, xs, true, cache.fwd);
  scan_direction(p.backward, xs, false, cache.bwd);
  const std::size_t steps = xs.rows();
  const std::size_t units = p.output_dim();
  cache.pre = Matrix(steps, units);
  cache.out = Matrix(steps, units);
  for (std::size_t t = 0; t < steps; ++t) {
    auto pre = cache.pre.row(t);
    for (std::size_t k = 0; k < units; ++k) pre[k] = p.b_y(0, k);
    detail::accumulate_xw(pre, cache.fwd.h.row(t), p.w_fy);
    detail::accumulate_xw(pre, cache.bwd.h.row(t), p.w_by);
    auto out = cache.out.row(t);
    for (std::size_t k = 0; k < units; ++k) out[k] = relu ? num::relu(pre[k]) : pre[k];
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (num_layers < 1) throw DomainError("model needs at least one layer");
  if (units < 2 || units % 2 != 0) throw DomainError("units per layer must be even and >= 2");
  if (components < 1) throw DomainError("mixture needs at least one component");
  if (seq_len < 2) throw DomainError("sequence length must be >= 2");
  if (input_dim < 1) throw DomainError("input_dim must be >= 1");
}

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  LstmParams p;
  for (Matrix* w : {&p.w_xf, &p.w_xi, &p.w_xo, &p.w_xc}) *w = Matrix(input_dim, hidden_dim);
  for (Matrix* w : {&p.w_hf, &p.w_hi, &p.w_ho, &p.w_hc}) *w = Matrix(hidden_dim, hidden_dim);
  for (Matrix* b : {&p.b_f, &p.b_i, &p.b_o, &p.b_c}) *b = Matrix(1, hidden_dim);
  return p;
}

void detail::DirectionCache::resize(std::size_t steps, std::size_t hidden) {
  for (Matrix* m : {&f, &i, &o, &g, &c, &tanh_c, &h}) {
    if (m->rows() != steps || m->cols() != hidden) *m = Matrix(steps, hidden);
  }
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams m;
  m.config = config;
  const std::size_t hidden = config.hidden_per_direction();
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::size_t in = l == 0 ? config.input_dim : config.units;
    BlstmLayerParams layer;
    layer.forward = LstmParams::zeros(in, hidden);
    layer.backward = LstmParams::zeros(in, hidden);
    layer.w_fy = Matrix(hidden, config.units);
    layer.w_by = Matrix(hidden, config.units);
    layer.b_y = Matrix(1, config.units);
    m.layers.push_back(std::move(layer));
  }
  m.mdn_head = {Matrix(config.units, config.mixture_width()), Matrix(1, config.mixture_width())};
  m.cls_head = {Matrix(config.units, 1), Matrix(1, 1)};
  return m;
}

ModelParams ModelParams::init_uniform(const ModelConfig& config, num::SeededRng& rng) {
  ModelParams m = zeros(config);
  const std::size_t hidden = config.hidden_per_direction();
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto& layer = m.layers[l];
    const std::size_t in = layer.forward.input_dim();
    for (LstmParams* dir : {&layer.forward, &layer.backward}) {
      // Fan-in of every gate is the concatenated [x, h_prev].
      for (Matrix* w : {&dir->w_xf, &dir->w_hf, &dir->b_f, &dir->w_xi, &dir->w_hi, &dir->b_i,
                        &dir->w_xo, &dir->w_ho, &dir->b_o, &dir->w_xc, &dir->w_hc, &dir->b_c}) {
        init_uniform_tensor(*w, in + hidden, rng);
      }
    }
    for (Matrix* w : {&layer.w_fy, &layer.w_by, &layer.b_y}) {
      init_uniform_tensor(*w, 2 * hidden, rng);
    }
  }
  for (Matrix* w : {&m.mdn_head.w, &m.mdn_head.b, &m.cls_head.w, &m.cls_head.b}) {
    init_uniform_tensor(*w, config.units, rng);
  }
  return m;
}

std::vector<TensorRef> ModelParams::tensors() {
  std::vector<TensorRef> out;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    append_lstm_refs(prefix + ".fwd", layers[l].forward, out);
    append_lstm_refs(prefix + ".bwd", layers[l].backward, out);
    out.push_back({prefix + ".W_fy", &layers[l].w_fy});
    out.push_back({prefix + ".W_by", &layers[l].w_by});
    out.push_back({prefix + ".b_y", &layers[l].b_y});
  }
  out.push_back({"mdn_head.W", &mdn_head.w});
  out.push_back({"mdn_head.b", &mdn_head.b});
  out.push_back({"cls_head.W", &cls_head.w});
  out.push_back({"cls_head.b", &cls_head.b});
  return out;
}

std::vector<ConstTensorRef> ModelParams::tensors() const {
  auto refs = const_cast<ModelParams*>(this)->tensors();
  std::vector<ConstTensorRef> out;
  out.reserve(refs.size());
  for (auto& r : refs) out.push_back({std::move(r.name), r.tensor});
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.tensor->size();
  return n;
}

void ModelParams::set_zero() {
  for (auto& t : tensors()) t.tensor->fill(0.0);
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& t : tensors()) {
    flat.insert(flat.end(), t.tensor->data().begin(), t.tensor->data().end());
  }
  return flat;
}

void ModelParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw ShapeError("assign: " + std::to_string(flat.size()) + " values for " +
                     std::to_string(parameter_count()) + " parameters");
  }
  std::size_t offset = 0;
  for (auto& t : tensors()) {
    auto dst = t.tensor->data();
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + dst.size()), dst.begin());
    offset += dst.size();
  }
}

std::size_t count_parameters(const ModelConfig& config) {
  config.validate();
  const std::size_t hidden = config.hidden_per_direction();
  std::size_t n = 0;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::size_t in = l == 0 ? config.input_dim : config.units;
    n += 2 * lstm_parameter_count(in, hidden);
    n += 2 * hidden * config.units + config.units;
  }
  n += config.units * config.mixture_width() + config.mixture_width();
  n += config.units + 1;
  return n;
}

std::size_t count_unidirectional_parameters(const ModelConfig& config) {
  config.validate();
  std::size_t n = 0;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::size_t in = l == 0 ? config.input_dim : config.units;
    n += lstm_parameter_count(in, config.units);
    n += config.units * config.units + config.units;
  }
  n += config.units * config.mixture_width() + config.mixture_width();
  n += config.units + 1;
  return n;
}

LstmState lstm_step(const LstmParams& p, std::span<const double> x, const LstmState& prev) {
  const std::size_t hidden = p.hidden_dim();
  check_vector(x, p.input_dim(), "lstm_step input");
  check_vector(prev.h, hidden, "lstm_step previous h");
  check_vector(prev.c, hidden, "lstm_step previous c");
  std::vector<double> f(hidden), i(hidden), o(hidden), g(hidden), tc(hidden);
  LstmState next = LstmState::zeros(hidden);
  cell_forward(p, x, prev.h, prev.c, f, i, o, g, next.c, tc, next.h);
  return next;
}

Matrix blstm_layer_forward(const BlstmLayerParams& p, const Matrix& xs, bool relu_output) {
  if (xs.rows() < 1) throw ShapeError("blstm_layer_forward needs at least one step");
  detail::LayerCache cache;
  layer_forward(p, xs, relu_output, cache);
  return cache.out;
}

void detail::run_forward(const ModelParams& m, const Matrix& xs, PassCache& cache) {
  if (xs.rows() < 1) throw ShapeError("forward pass needs at least one frame");
  if (xs.cols() != m.config.input_dim) {
    throw ShapeError("input frames have " + std::to_string(xs.cols()) + " features, expected " +
                     std::to_string(m.config.input_dim));
  }
  cache.layers.resize(m.layers.size());
  const Matrix* input = &xs;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const bool relu = l + 1 < m.layers.size();  // identity on the layer feeding the heads
    layer_forward(m.layers[l], *input, relu, cache.layers[l]);
    input = &cache.layers[l].out;
  }
  const auto& top = cache.layers.back();
  const std::size_t steps = xs.rows();
  const std::size_t width = m.config.mixture_width();
  cache.mixture_raw = Matrix(steps, width);
  for (std::size_t t = 0; t < steps; ++t) {
    auto raw = cache.mixture_raw.row(t);
    for (std::size_t k = 0; k < width; ++k) raw[k] = m.mdn_head.b(0, k);
    accumulate_xw(raw, top.out.row(t), m.mdn_head.w);
  }
  const std::size_t hidden = m.config.hidden_per_direction();
  double logit = m.cls_head.b(0, 0);
  for (std::size_t k = 0; k < hidden; ++k) {
    logit += top.fwd.h(steps - 1, k) * m.cls_head.w(k, 0);
    logit += top.bwd.h(0, k) * m.cls_head.w(hidden + k, 0);
  }
  cache.logit = logit;
}

ForwardResult forward_sequence(const ModelParams& m, const Matrix& xs) {
  detail::PassCache cache;
  detail::run_forward(m, xs, cache);
  return {cache.layers.back().out, cache.logit, cache.mixture_raw};
}

ForwardResult stack_forward(const ModelParams& m, const Matrix& xs) {
  if (xs.rows() != m.config.seq_len) {
    throw ShapeError("sequence has " + std::to_string(xs.rows()) + " frames, model expects " +
                     std::to_string(m.config.seq_len));
  }
  return forward_sequence(m, xs);
}

double predict_hit_probability(const ModelParams& m, const Matrix& xs) {
  return num::sigmoid(stack_forward(m, xs).logit);
}

}  // namespace hoopnet::seq
