#pragma once

// Forward-pass cache shared by inference and backpropagation.

#include <span>
#include <vector>

#include "hoopnet/seqnet.hpp"

namespace hoopnet::seq::detail {

/// Per-timestep gate activations of one direction, indexed by time (not scan order).
struct DirectionCache {
  Matrix f, i, o, g, c, tanh_c, h;  // each L x H

  void resize(std::size_t steps, std::size_t hidden);
};

struct LayerCache {
  Matrix input;  // L x in
  DirectionCache fwd;
  DirectionCache bwd;
  Matrix pre;  // L x units, projection before activation
  Matrix out;  // L x units
  bool relu = false;
};

struct PassCache {
  std::vector<LayerCache> layers;
  Matrix mixture_raw;  // L x 8C
  double logit = 0.0;
};

/// y += x W for x of length W.rows().
inline void accumulate_xw(std::span<double> y, std::span<const double> x, const Matrix& w) {
  const std::size_t n = w.cols();
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    const double* row = w.row(j).data();
    for (std::size_t k = 0; k < n; ++k) y[k] += xj * row[k];
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

/// Runs every layer and both heads over xs, filling cache.
void run_forward(const ModelParams& m, const Matrix& xs, PassCache& cache);

/// Backpropagates d(loss)/d(mixture_raw) and d(loss)/d(logit) through the
/// cached pass, accumulating into grads.
void run_backward(const ModelParams& m, const PassCache& cache, const Matrix& d_raw,
                  double d_logit, ModelParams& grads);

}  // namespace hoopnet::seq::detail
