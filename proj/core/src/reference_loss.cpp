// Plain-loop long double re-implementation of the training loss.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "hoopnet/errors.hpp"
#include "hoopnet/seqnet.hpp"

namespace hoopnet::seq {
namespace {

using Real = long double;
using Vec = std::vector<Real>;
using Seq = std::vector<Vec>;

// Reads tensors off the flat vector in declaration order.
class Reader {
 public:
  explicit Reader(std::span<const Real> flat) : flat_(flat) {}

  // rows x cols, input-major: element (r, c) at r * cols + c.
  std::span<const Real> take(std::size_t rows, std::size_t cols) {
    if (pos_ + rows * cols > flat_.size()) throw ShapeError("reference_loss: flat vector too short");
    auto out = flat_.subspan(pos_, rows * cols);
    pos_ += rows * cols;
    return out;
  }
  bool done() const { return pos_ == flat_.size(); }

 private:
  std::span<const Real> flat_;
  std::size_t pos_ = 0;
};

struct Gate {
  std::span<const Real> wx, wh, b;
};

struct Direction {
  Gate f, i, o, c;
  std::size_t in = 0, hidden = 0;
};

struct Layer {
  Direction fwd, bwd;
  std::span<const Real> w_fy, w_by, b_y;
  std::size_t units = 0;
};

Direction read_direction(Reader& r, std::size_t in, std::size_t hidden) {
  Direction d;
  d.in = in;
  d.hidden = hidden;
  for (Gate* g : {&d.f, &d.i, &d.o, &d.c}) {
    g->wx = r.take(in, hidden);
    g->wh = r.take(hidden, hidden);
    g->b = r.take(1, hidden);
  }
  return d;
}

Real sigmoid(Real v) { return 1.0L / (1.0L + std::exp(-v)); }

Real gate_pre(const Gate& g, const Vec& x, const Vec& h, std::size_t k, std::size_t hidden) {
  Real s = g.b[k];
  for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * g.wx[j * hidden + k];
  for (std::size_t j = 0; j < h.size(); ++j) s += h[j] * g.wh[j * hidden + k];
  return s;
}

Seq scan(const Direction& d, const Seq& xs, bool forward) {
  const std::size_t steps = xs.size();
  Seq hs(steps, Vec(d.hidden, 0.0L));
  Vec h(d.hidden, 0.0L), c(d.hidden, 0.0L);
  for (std::size_t n = 0; n < steps; ++n) {
    const std::size_t t = forward ? n : steps - 1 - n;
    Vec h_next(d.hidden), c_next(d.hidden);
    for (std::size_t k = 0; k < d.hidden; ++k) {
      const Real f = sigmoid(gate_pre(d.f, xs[t], h, k, d.hidden));
      const Real i = sigmoid(gate_pre(d.i, xs[t], h, k, d.hidden));
      const Real o = sigmoid(gate_pre(d.o, xs[t], h, k, d.hidden));
      const Real g = std::tanh(gate_pre(d.c, xs[t], h, k, d.hidden));
      c_next[k] = f * c[k] + i * g;
      h_next[k] = o * std::tanh(c_next[k]);
    }
    h = h_next;
    c = c_next;
    hs[t] = h;
  }
  return hs;
}

struct Pass {
  Seq raw;  // per step mixture parameters
  Real logit = 0.0L;
};

Pass run(const std::vector<Layer>& layers, std::span<const Real> mdn_w, std::span<const Real> mdn_b,
         std::span<const Real> cls_w, std::span<const Real> cls_b, const Seq& inputs,
         std::size_t width) {
  Seq xs = inputs;
  Seq top_fwd, top_bwd;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& L = layers[l];
    const Seq hf = scan(L.fwd, xs, true);
    const Seq hb = scan(L.bwd, xs, false);
    const bool relu = l + 1 < layers.size();
    Seq ys(xs.size(), Vec(L.units));
    for (std::size_t t = 0; t < xs.size(); ++t) {
      for (std::size_t u = 0; u < L.units; ++u) {
        Real s = L.b_y[u];
        for (std::size_t k = 0; k < L.fwd.hidden; ++k) s += hf[t][k] * L.w_fy[k * L.units + u];
        for (std::size_t k = 0; k < L.bwd.hidden; ++k) s += hb[t][k] * L.w_by[k * L.units + u];
        ys[t][u] = relu ? std::max(s, 0.0L) : s;
      }
    }
    xs = std::move(ys);
    top_fwd = hf;
    top_bwd = hb;
  }
  Pass p;
  const std::size_t units = xs.front().size();
  for (const Vec& y : xs) {
    Vec raw(width);
    for (std::size_t j = 0; j < width; ++j) {
      Real s = mdn_b[j];
      for (std::size_t u = 0; u < units; ++u) s += y[u] * mdn_w[u * width + j];
      raw[j] = s;
    }
    p.raw.push_back(std::move(raw));
  }
  // Classifier input: last forward state then first backward state.
  const Vec& hf_last = top_fwd.back();
  const Vec& hb_first = top_bwd.front();
  p.logit = cls_b[0];
  for (std::size_t k = 0; k < hf_last.size(); ++k) p.logit += hf_last[k] * cls_w[k];
  for (std::size_t k = 0; k < hb_first.size(); ++k) p.logit += hb_first[k] * cls_w[hf_last.size() + k];
  return p;
}

Real step_nll(const Vec& raw, const TrainingSample& s, std::size_t t) {
  const Real two_pi = 2.0L * std::numbers::pi_v<Real>;
  const std::size_t comps = raw.size() / mdn::kRawPerComponent;
  const Real y[3] = {static_cast<Real>(s.targets(t, 0)), static_cast<Real>(s.targets(t, 1)),
                     static_cast<Real>(s.targets(t, 2))};
  Real wsum = 0.0L;
  for (std::size_t c = 0; c < comps; ++c) wsum += std::exp(raw[c * mdn::kRawPerComponent]);
  Real p = 0.0L;
  for (std::size_t c = 0; c < comps; ++c) {
    const Real* r = &raw[c * mdn::kRawPerComponent];
    const Real w = std::exp(r[0]) / wsum;
    Real sd[3];
    for (int k = 0; k < 3; ++k) {
      sd[k] = std::exp(std::clamp<Real>(r[4 + k], mdn::kSigmaRawMin, mdn::kSigmaRawMax));
    }
    const Real rho = std::tanh(std::clamp<Real>(r[7], mdn::kRhoRawMin, mdn::kRhoRawMax));
    const Real zx = (y[0] - r[1]) / sd[0];
    const Real zy = (y[1] - r[2]) / sd[1];
    const Real zz = (y[2] - r[3]) / sd[2];
    const Real q = (zx * zx + zy * zy - 2.0L * rho * zx * zy) / (1.0L - rho * rho);
    const Real nxy = std::exp(-q / 2.0L) / (two_pi * sd[0] * sd[1] * std::sqrt(1.0L - rho * rho));
    const Real nz = std::exp(-zz * zz / 2.0L) / (std::sqrt(two_pi) * sd[2]);
    p += w * nxy * nz;
  }
  return -std::log(p);
}

Real bce(Real logit, int label) {
  const Real prob = sigmoid(logit);
  return label == 1 ? -std::log(prob) : -std::log(1.0L - prob);
}

}  // namespace

long double reference_loss(const ModelConfig& config, std::span<const long double> flat,
                           std::span<const TrainingSample> batch, const LossSpec& spec) {
  config.validate();
  if (batch.empty()) throw ShapeError("reference_loss: empty batch");
  Reader r(flat);
  const std::size_t hidden = config.hidden_per_direction();
  std::vector<Layer> layers(config.num_layers);
  std::size_t in = config.input_dim;
  for (auto& L : layers) {
    L.units = config.units;
    L.fwd = read_direction(r, in, hidden);
    L.bwd = read_direction(r, in, hidden);
    L.w_fy = r.take(hidden, config.units);
    L.w_by = r.take(hidden, config.units);
    L.b_y = r.take(1, config.units);
    in = config.units;
  }
  const std::size_t width = config.mixture_width();
  const auto mdn_w = r.take(config.units, width);
  const auto mdn_b = r.take(1, width);
  const auto cls_w = r.take(2 * hidden, 1);
  const auto cls_b = r.take(1, 1);
  if (!r.done()) throw ShapeError("reference_loss: flat vector too long");

  Real total = 0.0L;
  for (const auto& s : batch) {
    Seq xs(s.inputs.rows(), Vec(s.inputs.cols()));
    for (std::size_t t = 0; t < s.inputs.rows(); ++t) {
      for (std::size_t k = 0; k < s.inputs.cols(); ++k) xs[t][k] = s.inputs(t, k);
    }
    Real nll = 0.0L, ce = 0.0L;
    const Pass full = run(layers, mdn_w, mdn_b, cls_w, cls_b, xs, width);
    if (spec.bce_weight != 0.0) ce = bce(full.logit, s.label);
    if (spec.nll_weight != 0.0) {
      for (std::size_t t = 0; t + 1 < xs.size(); ++t) {
        if (spec.nll_mode == NllMode::kFullSequence) {
          nll += step_nll(full.raw[t], s, t);
        } else {
          const Seq prefix(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(t + 1));
          nll += step_nll(run(layers, mdn_w, mdn_b, cls_w, cls_b, prefix, width).raw[t], s, t);
        }
      }
    }
    total += static_cast<Real>(spec.bce_weight) * ce + static_cast<Real>(spec.nll_weight) * nll;
  }
  return total / static_cast<Real>(batch.size());
}

}  // namespace hoopnet::seq
