// Backpropagation through time for the BLSTM stack, batch losses, and the
// finite-difference gradient checker.

#include <algorithm>
#include <cmath>

#include "hoopnet/errors.hpp"
#include "hoopnet/seqnet.hpp"
#include "seqnet_internal.hpp"

namespace hoopnet::seq {
namespace detail {
namespace {

// y += a * x
inline void axpy(std::span<double> y, double a, std::span<const double> x) {
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += a * x[k];
}

void bptt_direction(const LstmParams& p, const DirectionCache& cache, const Matrix& input,
                    const Matrix& dh_ext, bool forward, LstmParams& g, Matrix& d_input) {
  const std::size_t steps = input.rows();
  const std::size_t hidden = p.hidden_dim();
  const std::size_t in = p.input_dim();
  std::vector<double> dh_next(hidden, 0.0), dc_next(hidden, 0.0);
  std::vector<double> dpf(hidden), dpi(hidden), dpo(hidden), dpg(hidden), dc_prev(hidden);
  const std::vector<double> zeros(hidden, 0.0);

  for (std::size_t s = steps; s-- > 0;) {
    const std::size_t t = forward ? s : steps - 1 - s;
    const bool has_prev = s > 0;
    const std::size_t prev = forward ? t - 1 : t + 1;
    std::span<const double> h_prev = has_prev ? cache.h.row(prev) : std::span<const double>(zeros);
    std::span<const double> c_prev = has_prev ? cache.c.row(prev) : std::span<const double>(zeros);

    const auto f = cache.f.row(t);
    const auto i = cache.i.row(t);
    const auto o = cache.o.row(t);
    const auto gg = cache.g.row(t);
    const auto tc = cache.tanh_c.row(t);
    const auto ext = dh_ext.row(t);

    for (std::size_t k = 0; k < hidden; ++k) {
      const double dh = ext[k] + dh_next[k];
      const double d_o = dh * tc[k];
      const double dc = dc_next[k] + dh * o[k] * (1.0 - tc[k] * tc[k]);
      dc_prev[k] = dc * f[k];
      dpf[k] = dc * c_prev[k] * f[k] * (1.0 - f[k]);
      dpi[k] = dc * gg[k] * i[k] * (1.0 - i[k]);
      dpo[k] = d_o * o[k] * (1.0 - o[k]);
      dpg[k] = dc * i[k] * (1.0 - gg[k] * gg[k]);
    }

    axpy(g.b_f.row(0), 1.0, dpf);
    axpy(g.b_i.row(0), 1.0, dpi);
    axpy(g.b_o.row(0), 1.0, dpo);
    axpy(g.b_c.row(0), 1.0, dpg);

    const auto x = input.row(t);
    auto dx = d_input.row(t);
    for (std::size_t j = 0; j < in; ++j) {
      const double xj = x[j];
      if (xj != 0.0) {
        axpy(g.w_xf.row(j), xj, dpf);
        axpy(g.w_xi.row(j), xj, dpi);
        axpy(g.w_xo.row(j), xj, dpo);
        axpy(g.w_xc.row(j), xj, dpg);
      }
      dx[j] += dot(p.w_xf.row(j), dpf) + dot(p.w_xi.row(j), dpi) + dot(p.w_xo.row(j), dpo) +
               dot(p.w_xc.row(j), dpg);
    }

    for (std::size_t k = 0; k < hidden; ++k) {
      if (has_prev) {
        const double hk = h_prev[k];
        if (hk != 0.0) {
          axpy(g.w_hf.row(k), hk, dpf);
          axpy(g.w_hi.row(k), hk, dpi);
          axpy(g.w_ho.row(k), hk, dpo);
          axpy(g.w_hc.row(k), hk, dpg);
        }
        dh_next[k] = dot(p.w_hf.row(k), dpf) + dot(p.w_hi.row(k), dpi) +
                     dot(p.w_ho.row(k), dpo) + dot(p.w_hc.row(k), dpg);
      } else {
        dh_next[k] = 0.0;
      }
    }
    dc_next.swap(dc_prev);
  }
}

}  // namespace

void run_backward(const ModelParams& m, const PassCache& cache, const Matrix& d_raw,
                  double d_logit, ModelParams& grads) {
  const std::size_t steps = cache.mixture_raw.rows();
  const std::size_t units = m.config.units;
  const std::size_t hidden = m.config.hidden_per_direction();
  const auto& top = cache.layers.back();

  Matrix d_out(steps, units);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto dr = d_raw.row(t);
    if (std::all_of(dr.begin(), dr.end(), [](double v) { return v == 0.0; })) continue;
    axpy(grads.mdn_head.b.row(0), 1.0, dr);
    const auto y = top.out.row(t);
    auto dy = d_out.row(t);
    for (std::size_t k = 0; k < units; ++k) {
      if (y[k] != 0.0) axpy(grads.mdn_head.w.row(k), y[k], dr);
      dy[k] += dot(m.mdn_head.w.row(k), dr);
    }
  }

  Matrix dh_fwd(steps, hidden);
  Matrix dh_bwd(steps, hidden);
  if (d_logit != 0.0) {
    grads.cls_head.b(0, 0) += d_logit;
    for (std::size_t k = 0; k < hidden; ++k) {
      grads.cls_head.w(k, 0) += top.fwd.h(steps - 1, k) * d_logit;
      grads.cls_head.w(hidden + k, 0) += top.bwd.h(0, k) * d_logit;
      dh_fwd(steps - 1, k) += m.cls_head.w(k, 0) * d_logit;
      dh_bwd(0, k) += m.cls_head.w(hidden + k, 0) * d_logit;
    }
  }

  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const auto& p = m.layers[l];
    const auto& lc = cache.layers[l];
    auto& g = grads.layers[l];

    for (std::size_t t = 0; t < steps; ++t) {
      auto dpre = d_out.row(t);
      if (lc.relu) {
        const auto pre = lc.pre.row(t);
        for (std::size_t k = 0; k < units; ++k) {
          if (!(pre[k] > 0.0)) dpre[k] = 0.0;
        }
      }
      axpy(g.b_y.row(0), 1.0, dpre);
      const auto hf = lc.fwd.h.row(t);
      const auto hb = lc.bwd.h.row(t);
      auto dhf = dh_fwd.row(t);
      auto dhb = dh_bwd.row(t);
      for (std::size_t k = 0; k < hidden; ++k) {
        axpy(g.w_fy.row(k), hf[k], dpre);
        axpy(g.w_by.row(k), hb[k], dpre);
        dhf[k] += dot(p.w_fy.row(k), dpre);
        dhb[k] += dot(p.w_by.row(k), dpre);
      }
    }

    Matrix d_input(steps, lc.input.cols());
    bptt_direction(p.forward, lc.fwd, lc.input, dh_fwd, true, g.forward, d_input);
    bptt_direction(p.backward, lc.bwd, lc.input, dh_bwd, false, g.backward, d_input);

    if (l > 0) {
      d_out = std::move(d_input);
      dh_fwd.fill(0.0);
      dh_bwd.fill(0.0);
    }
  }
}

}  // namespace detail

namespace {

Matrix leading_rows(const Matrix& m, std::size_t n) {
  Matrix out(n, m.cols());
  std::copy(m.data().begin(), m.data().begin() + static_cast<std::ptrdiff_t>(n * m.cols()),
            out.data().begin());
  return out;
}

mdn::TargetPoint target_at(const Matrix& targets, std::size_t s) {
  return {targets(s, 0), targets(s, 1), targets(s, 2)};
}

double binary_cross_entropy(double logit, int label) {
  // softplus(l) - y*l, stable for large |l|
  const double softplus = std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  return softplus - static_cast<double>(label) * logit;
}

void check_sample(const ModelParams& m, const TrainingSample& s) {
  if (s.inputs.cols() != m.config.input_dim || s.inputs.rows() < 2) {
    throw ShapeError("training sample inputs are " + s.inputs.shape_string());
  }
  if (s.targets.rows() + 1 != s.inputs.rows() || s.targets.cols() != 3) {
    throw ShapeError("training sample targets are " + s.targets.shape_string() + " for " +
                     std::to_string(s.inputs.rows()) + " frames");
  }
}

// NaN or inf activations mean the weights have diverged; the mixture
// normalizer would otherwise report them as a domain error.
void require_finite_output(const detail::PassCache& cache) {
  if (!cache.mixture_raw.all_finite() || !std::isfinite(cache.logit)) {
    throw TrainingError("non-finite network output");
  }
}

// Loss of one sample. Gradients of scale * loss accumulate into grads when non-null.
SampleEvaluation sample_loss(const ModelParams& m, const TrainingSample& sample,
                             const LossSpec& spec, double scale, ModelParams* grads,
                             detail::PassCache& cache) {
  check_sample(m, sample);
  const std::size_t steps = sample.inputs.rows();
  const std::size_t width = m.config.mixture_width();
  SampleEvaluation result;
  LossBreakdown& loss = result.loss;

  const bool want_nll = spec.nll_weight != 0.0;
  const bool want_bce = spec.bce_weight != 0.0;
  const bool full_pass_nll = want_nll && spec.nll_mode == NllMode::kFullSequence;

  if (full_pass_nll || want_bce) {
    detail::run_forward(m, sample.inputs, cache);
    require_finite_output(cache);
    result.logit = cache.logit;
    Matrix d_raw(steps, width);
    double d_logit = 0.0;
    if (full_pass_nll) {
      for (std::size_t s = 0; s + 1 < steps; ++s) {
        loss.nll += mdn::nll_and_raw_gradient(cache.mixture_raw.row(s), target_at(sample.targets, s),
                                              d_raw.row(s));
      }
      for (double& v : d_raw.data()) v *= spec.nll_weight * scale;
    }
    if (want_bce) {
      loss.bce = binary_cross_entropy(cache.logit, sample.label);
      d_logit = spec.bce_weight * scale *
                (num::sigmoid(cache.logit) - static_cast<double>(sample.label));
    }
    if (grads != nullptr) detail::run_backward(m, cache, d_raw, d_logit, *grads);
  }

  if (want_nll && spec.nll_mode == NllMode::kPrefix) {
    for (std::size_t s = 0; s + 1 < steps; ++s) {
      const Matrix prefix = leading_rows(sample.inputs, s + 1);
      detail::run_forward(m, prefix, cache);
      require_finite_output(cache);
      Matrix d_raw(s + 1, width);
      loss.nll += mdn::nll_and_raw_gradient(cache.mixture_raw.row(s), target_at(sample.targets, s),
                                            d_raw.row(s));
      if (grads != nullptr) {
        for (double& v : d_raw.row(s)) v *= spec.nll_weight * scale;
        detail::run_backward(m, cache, d_raw, 0.0, *grads);
      }
    }
  }

  loss.total = spec.bce_weight * loss.bce + spec.nll_weight * loss.nll;
  return result;
}

LossBreakdown batch_loss(const ModelParams& m, std::span<const TrainingSample> batch,
                         const LossSpec& spec, ModelParams* grads, std::size_t batch_id,
                         std::span<double> per_sample) {
  if (batch.empty()) throw DomainError("loss over an empty batch");
  if (!per_sample.empty() && per_sample.size() != batch.size()) {
    throw ShapeError("per-sample loss buffer does not match the batch size");
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  detail::PassCache cache;
  LossBreakdown total;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    LossBreakdown l;
    try {
      l = sample_loss(m, batch[k], spec, scale, grads, cache).loss;
    } catch (const TrainingError& e) {
      throw TrainingError(std::string(e.what()) + " in batch " + std::to_string(batch_id), batch_id);
    }
    if (!per_sample.empty()) per_sample[k] = l.total;
    total.total += l.total;
    total.bce += l.bce;
    total.nll += l.nll;
  }
  total.total *= scale;
  total.bce *= scale;
  total.nll *= scale;
  if (!std::isfinite(total.total)) {
    throw TrainingError("non-finite loss in batch " + std::to_string(batch_id), batch_id);
  }
  return total;
}

bool same_shapes(const ModelParams& a, const ModelParams& b) {
  if (!(a.config == b.config)) return false;
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (ta[k].tensor->rows() != tb[k].tensor->rows() ||
        ta[k].tensor->cols() != tb[k].tensor->cols()) {
      return false;
    }
  }
  return true;
}

}  // namespace

LossBreakdown evaluate_loss(const ModelParams& m, std::span<const TrainingSample> batch,
                            const LossSpec& spec) {
  return batch_loss(m, batch, spec, nullptr, 0, {});
}

std::vector<SampleEvaluation> evaluate_samples(const ModelParams& m,
                                               std::span<const TrainingSample> samples,
                                               const LossSpec& spec) {
  detail::PassCache cache;
  std::vector<SampleEvaluation> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(sample_loss(m, s, spec, 1.0, nullptr, cache));
  return out;
}

LossBreakdown backward(const ModelParams& m, std::span<const TrainingSample> batch,
                       const LossSpec& spec, ModelParams& grads, std::size_t batch_id,
                       std::span<double> per_sample_loss) {
  if (!same_shapes(m, grads)) {
    grads = ModelParams::zeros(m.config);
  } else {
    grads.set_zero();
  }
  return batch_loss(m, batch, spec, &grads, batch_id, per_sample_loss);
}

double gradient_relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport gradient_check(std::uint64_t seed, const GradCheckOptions& options) {
  const ModelConfig& config = options.config;
  num::SeededRng root(seed);
  num::SeededRng init_rng = root.split(num::Stream::kInit);
  num::SeededRng data_rng = root.split(num::Stream::kData);
  num::SeededRng pick_rng = root.split(num::Stream::kSampling);

  ModelParams model = ModelParams::init_uniform(config, init_rng);
  std::vector<TrainingSample> batch(options.batch_size);
  for (auto& s : batch) {
    s.inputs = Matrix(config.seq_len, config.input_dim, num::gaussian_draw(data_rng, config.seq_len * config.input_dim));
    s.targets = Matrix(config.seq_len - 1, 3, num::gaussian_draw(data_rng, (config.seq_len - 1) * 3));
    s.label = data_rng.uniform() < 0.5 ? 1 : 0;
  }

  ModelParams grads;
  backward(model, batch, options.loss, grads);
  if (options.corrupt_gradient) options.corrupt_gradient(grads);

  // Map flat indices back to (tensor, row, col).
  const auto refs = grads.tensors();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& r : refs) {
    offsets.push_back(total);
    total += r.tensor->size();
  }
  const std::vector<double> flat = model.flatten();
  const std::vector<long double> theta(flat.begin(), flat.end());
  const std::vector<double> analytic = grads.flatten();

  // Extended precision keeps the oracle's rounding noise far below the
  // smallest gradients of a freshly initialised model.
  const num::ExtendedScalarFunction f = [&](std::span<const long double> values) {
    return reference_loss(config, values, batch, options.loss);
  };

  GradCheckReport report;
  const std::size_t n = std::min(options.coordinates, total);
  std::vector<std::size_t> order(total);
  for (std::size_t k = 0; k < total; ++k) order[k] = k;
  pick_rng.shuffle(order);
  order.resize(n);
  if (!options.focus_tensor.empty()) {
    const auto it = std::find_if(refs.begin(), refs.end(),
                                 [&](const TensorRef& r) { return r.name == options.focus_tensor; });
    if (it == refs.end()) throw DomainError("gradient_check: no tensor named '" + options.focus_tensor + "'");
    const std::size_t focus = offsets[static_cast<std::size_t>(it - refs.begin())];
    if (std::find(order.begin(), order.end(), focus) == order.end()) order.push_back(focus);
  }
  std::sort(order.begin(), order.end());

  for (std::size_t idx : order) {
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), idx);
    const std::size_t tensor = static_cast<std::size_t>(it - offsets.begin()) - 1;
    const std::size_t local = idx - offsets[tensor];
    GradCheckCoordinate c;
    c.tensor = refs[tensor].name;
    c.row = local / refs[tensor].tensor->cols();
    c.col = local % refs[tensor].tensor->cols();
    c.flat_index = idx;
    c.analytic = analytic[idx];
    c.numeric = static_cast<double>(
        num::finite_diff_coordinate(f, theta, idx, static_cast<long double>(options.step)));
    c.rel_error = gradient_relative_error(c.analytic, c.numeric);
    if (report.coordinates.empty() || c.rel_error > report.worst.rel_error) report.worst = c;
    report.coordinates.push_back(std::move(c));
  }
  report.max_rel_error = report.worst.rel_error;
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace hoopnet::seq
