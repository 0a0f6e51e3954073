#pragma once

// Stacked bidirectional LSTM with a mixture-density head and a hit/miss head.
//
// Weight matrices are stored input-major: a map from an m-vector to an
// n-vector is an (m x n) matrix W and is applied as y = x W + b. This keeps
// the hot inner loops contiguous.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hoopnet/mixhead.hpp"
#include "hoopnet/numcore.hpp"

namespace hoopnet::seq {

using num::Matrix;

struct ModelConfig {
  std::size_t num_layers = 2;
  /// Output width of every BLSTM layer; each direction gets units / 2.
  std::size_t units = 64;
  /// Mixture components. More than a handful tends to overfit.
  std::size_t components = mdn::kDefaultComponents;
  std::size_t seq_len = 12;
  std::size_t input_dim = 4;

  std::size_t hidden_per_direction() const { return units / 2; }
  std::size_t mixture_width() const { return mdn::kRawPerComponent * components; }
  /// Throws DomainError on an unusable configuration.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// One LSTM direction: four gates (forget, input, output, candidate).
struct LstmParams {
  Matrix w_xf, w_hf, b_f;
  Matrix w_xi, w_hi, b_i;
  Matrix w_xo, w_ho, b_o;
  Matrix w_xc, w_hc, b_c;

  static LstmParams zeros(std::size_t input_dim, std::size_t hidden_dim);
  std::size_t input_dim() const { return w_xf.rows(); }
  std::size_t hidden_dim() const { return w_xf.cols(); }

  bool operator==(const LstmParams&) const = default;
};

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;

  static LstmState zeros(std::size_t hidden_dim) {
    return {std::vector<double>(hidden_dim, 0.0), std::vector<double>(hidden_dim, 0.0)};
  }
};

struct BlstmLayerParams {
  LstmParams forward;
  LstmParams backward;
  Matrix w_fy;  // hidden x units
  Matrix w_by;  // hidden x units
  Matrix b_y;   // 1 x units

  std::size_t output_dim() const { return b_y.cols(); }

  bool operator==(const BlstmLayerParams&) const = default;
};

struct AffineHead {
  Matrix w;  // in x out
  Matrix b;  // 1 x out

  bool operator==(const AffineHead&) const = default;
};

struct TensorRef {
  std::string name;
  Matrix* tensor;
};

struct ConstTensorRef {
  std::string name;
  const Matrix* tensor;
};

struct ModelParams {
  ModelConfig config;
  std::vector<BlstmLayerParams> layers;
  AffineHead mdn_head;  // units -> 8 * components, applied per timestep
  AffineHead cls_head;  // units -> 1, applied to [h_fwd(T), h_bwd(1)] of the top layer

  /// All-zero parameters with the shapes implied by config.
  static ModelParams zeros(const ModelConfig& config);
  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per tensor; biases included.
  static ModelParams init_uniform(const ModelConfig& config, num::SeededRng& rng);

  /// Every tensor in declaration order. Checkpoints, optimizers and the
  /// gradient checker all walk this list.
  std::vector<TensorRef> tensors();
  std::vector<ConstTensorRef> tensors() const;

  std::size_t parameter_count() const;
  void set_zero();
  /// Flattened copy of every parameter in declaration order, and its inverse.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  bool operator==(const ModelParams&) const = default;
};

/// Parameter count of the bidirectional stack described by config.
std::size_t count_parameters(const ModelConfig& config);
/// Same count for a unidirectional LSTM stack of the same width: each layer
/// one LSTM with `units` hidden cells, same projection and heads.
std::size_t count_unidirectional_parameters(const ModelConfig& config);

LstmState lstm_step(const LstmParams& p, std::span<const double> x, const LstmState& prev);

/// One bidirectional layer over xs (T x input_dim). ReLU on the projection
/// when relu_output is set, identity otherwise.
Matrix blstm_layer_forward(const BlstmLayerParams& p, const Matrix& xs, bool relu_output);

struct ForwardResult {
  Matrix top_features;  // T x units
  double logit = 0.0;
  Matrix mixture_raw;  // T x 8C
};

/// Full stack on exactly config.seq_len frames.
ForwardResult stack_forward(const ModelParams& m, const Matrix& xs);
/// Same computation for any length >= 1 (used on growing prefixes).
ForwardResult forward_sequence(const ModelParams& m, const Matrix& xs);

/// How the mixture loss is attached to the sequence.
enum class NllMode {
  /// One pass over the whole sequence; step t scores the offset t -> t+1.
  kFullSequence,
  /// The offset t -> t+1 is scored by the last step of a pass over frames
  /// 1..t only, matching how generation sees an observed prefix.
  kPrefix,
};

struct LossSpec {
  double bce_weight = 1.0;
  double nll_weight = 1.0;
  NllMode nll_mode = NllMode::kFullSequence;
};

struct TrainingSample {
  Matrix inputs;   // T x input_dim
  Matrix targets;  // (T-1) x 3 next-point offsets
  int label = 0;
};

struct LossBreakdown {
  double total = 0.0;
  double bce = 0.0;
  double nll = 0.0;
};

/// Mean loss over the batch without gradients.
LossBreakdown evaluate_loss(const ModelParams& m, std::span<const TrainingSample> batch,
                            const LossSpec& spec);

struct SampleEvaluation {
  LossBreakdown loss;
  /// Classification logit of the full-sequence pass; 0 when the loss needs no such pass.
  double logit = 0.0;
};

/// Per-sample losses (unscaled) and logits, in batch order.
std::vector<SampleEvaluation> evaluate_samples(const ModelParams& m,
                                               std::span<const TrainingSample> samples,
                                               const LossSpec& spec);

/// Mean loss over the batch; writes the exact gradient of that mean into
/// grads (reshaped to match m). Throws TrainingError carrying batch_id if the
/// loss is not finite. per_sample_loss, when non-empty, receives each
/// sample's unscaled total loss.
LossBreakdown backward(const ModelParams& m, std::span<const TrainingSample> batch,
                       const LossSpec& spec, ModelParams& grads, std::size_t batch_id = 0,
                       std::span<double> per_sample_loss = {});

/// Hit probability for one sequence of config.seq_len frames.
double predict_hit_probability(const ModelParams& m, const Matrix& xs);

// Gradient checking -------------------------------------------------------

/// Batch-mean loss recomputed from scratch in long double from a flat
/// parameter vector (ModelParams::flatten order). Shares no code with the
/// forward pass above; the gradient checker differentiates it numerically.
long double reference_loss(const ModelConfig& config, std::span<const long double> flat,
                           std::span<const TrainingSample> batch, const LossSpec& spec);

struct GradCheckCoordinate {
  std::string tensor;
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t flat_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckCoordinate> coordinates;
  GradCheckCoordinate worst;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckOptions {
  ModelConfig config{2, 8, 3, 12, 4};
  std::size_t batch_size = 4;
  std::size_t coordinates = 100;
  double step = 1e-5;
  double tolerance = 1e-4;
  LossSpec loss{};
  /// Test hook: lets a caller tamper with the analytic gradient before comparison.
  std::function<void(ModelParams&)> corrupt_gradient;
  /// When set, entry [0, 0] of this tensor is checked in addition to the random sample.
  std::string focus_tensor;
};

/// Compares backward() against central differences on randomly chosen
/// coordinates of a random model and batch.
GradCheckReport gradient_check(std::uint64_t seed, const GradCheckOptions& options = {});

/// Relative error used by the gradient checker: |a - n| / max(|a|, |n|, 1e-6).
double gradient_relative_error(double analytic, double numeric);

}  // namespace hoopnet::seq
