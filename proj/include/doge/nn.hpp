#pragma once

#include "doge/autodiff.hpp"
#include "doge/common.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace doge::nn {

/// Fully connected ReLU network with an identity output layer.
///
/// Parameters are stored as a flat list [W0, b0, W1, b1, ...] where W_l is
/// (dims[l+1] x dims[l]) and b_l is a (dims[l+1] x 1) column.
class MlpModel {
 public:
  MlpModel() = default;
  /// Zero-initialized network with the given layer widths (input first).
  explicit MlpModel(std::vector<int> layer_dims);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
  static MlpModel init(std::vector<int> layer_dims, Rng& rng);

  const std::vector<int>& layer_dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  std::size_t num_layers() const { return dims_.size() - 1; }

  Matrix& weight(std::size_t layer) { return params_[2 * layer]; }
  const Matrix& weight(std::size_t layer) const { return params_[2 * layer]; }
  Matrix& bias(std::size_t layer) { return params_[2 * layer + 1]; }
  const Matrix& bias(std::size_t layer) const { return params_[2 * layer + 1]; }

  std::vector<Matrix>& params() { return params_; }
  const std::vector<Matrix>& params() const { return params_; }
  std::size_t parameter_count() const;

  bool same_architecture(const MlpModel& other) const { return dims_ == other.dims_; }
  bool all_finite() const;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::vector<int> dims_;
  std::vector<Matrix> params_;
};

/// One gradient matrix per parameter, in MlpModel::params() order.
using GradSet = std::vector<Matrix>;

/// Single-sample evaluation. Throws InvalidArgument on a length mismatch.
Vec forward(const MlpModel& model, const Vec& input);
/// Batched evaluation: inputs are (input_dim x batch), result (output_dim x batch).
Matrix forward_batch(const MlpModel& model, const Matrix& inputs);

/// Parameter leaves of one model placed on a tape.
struct Bound {
  std::vector<ad::Var> params;
};

/// Puts the model's parameters on the tape. Frozen bindings still carry
/// gradients to their inputs, just not to themselves.
Bound bind(ad::Tape& tape, const MlpModel& model, bool trainable);
ad::Var apply(const Bound& bound, ad::Var input);
GradSet gradients(const ad::Tape& tape, const Bound& bound);

struct MseResult {
  double loss = 0.0;
  GradSet grads;
};

/// d(mean squared error)/d(theta) over a batch; the model is not modified.
/// inputs: (input_dim x batch), targets: (output_dim x batch).
/// Throws Divergence when the loss or any gradient is non-finite.
MseResult grad_mse(const MlpModel& model, const Matrix& inputs, const Matrix& targets);

struct OptimState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimState for_model(const MlpModel& model, double lr);
};

/// Bias-corrected Adam update in place.
void adam_step(MlpModel& model, const GradSet& grads, OptimState& opt);

/// target <- tau * online + (1 - tau) * target.
void soft_update(MlpModel& target, const MlpModel& online, double tau);

/// Binary parameter file: magic, layer count, widths, then every parameter
/// array row-major as little-endian doubles.
void save(const MlpModel& model, const std::filesystem::path& path);
MlpModel load(const std::filesystem::path& path);

}  // namespace doge::nn
