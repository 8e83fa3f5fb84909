#pragma once

// Small dense multilayer perceptrons with hand-written reverse mode.
//
// Activations are stored column-major: a batch of B inputs is an
// (input_dim x B) matrix. Hidden layers are Linear -> [LayerNorm] -> ReLU;
// the output layer is linear.

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace oraclab::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct MlpSpec {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<int> hidden;
  bool layer_norm = false;
  std::uint64_t init_seed = 0;
  /// Multiplier applied to the fan-in initialisation of the output layer.
  double output_scale = 1.0;

  void validate() const;
  std::size_t layer_count() const { return hidden.size() + 1; }
  /// Number of named arrays the spec produces.
  std::size_t array_count() const;
  std::size_t parameter_count() const;

  bool operator==(const MlpSpec&) const = default;
};

struct NamedArray {
  std::string name;
  Matrix value;
};

class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(std::vector<NamedArray> arrays) : arrays_(std::move(arrays)) {}

  std::size_t size() const { return arrays_.size(); }
  bool empty() const { return arrays_.empty(); }
  NamedArray& operator[](std::size_t i) { return arrays_[i]; }
  const NamedArray& operator[](std::size_t i) const { return arrays_[i]; }

  std::span<const NamedArray> view() const { return arrays_; }
  std::span<const NamedArray> view(std::size_t offset, std::size_t count) const {
    return std::span<const NamedArray>(arrays_).subspan(offset, count);
  }
  std::vector<NamedArray>& arrays() { return arrays_; }
  const std::vector<NamedArray>& arrays() const { return arrays_; }

  /// Appends every array of `other`, prefixing names.
  void append(const ParamSet& other, const std::string& prefix = {});

  ParamSet zeros_like() const;
  bool same_shape(const ParamSet& other) const;
  bool all_finite() const;
  std::size_t scalar_count() const;

  /// this += scale * other (shapes must match).
  void axpy(double scale, const ParamSet& other);

  bool operator==(const ParamSet& other) const;

 private:
  std::vector<NamedArray> arrays_;
};

/// Fan-in scaled uniform initialisation, deterministic in spec.init_seed.
ParamSet init_params(const MlpSpec& spec);

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> normalized;       // per hidden layer, post-norm x_hat (empty without layer norm)
  std::vector<Eigen::RowVectorXd> inv_std;
  std::vector<Matrix> activations;      // per hidden layer, post-ReLU
  std::vector<Matrix> preactivations;   // per hidden layer, input to ReLU
};

/// Batched forward pass. `params` must hold spec.array_count() arrays.
Matrix forward(const MlpSpec& spec, std::span<const NamedArray> params, const Matrix& input,
               ForwardCache* cache = nullptr);

struct Gradients {
  ParamSet params;
  Matrix input;
};

/// Reverse pass for sum over the batch of upstream^T * output. Parameter
/// gradients are skipped when `want_params` is false.
Gradients backward(const MlpSpec& spec, std::span<const NamedArray> params, const ForwardCache& cache,
                   const Matrix& upstream, bool want_params = true);

// Single-sample conveniences.
Vector forward(const MlpSpec& spec, const ParamSet& params, const Vector& input);
ParamSet grad_params(const MlpSpec& spec, const ParamSet& params, const Vector& input, const Vector& upstream);
Vector grad_input(const MlpSpec& spec, const ParamSet& params, const Vector& input, const Vector& upstream);

struct AdamState {
  std::int64_t step = 0;
  ParamSet first_moment;
  ParamSet second_moment;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const ParamSet& params, double lr);
};

/// One bias-corrected Adam descent step. Returns false and leaves params and
/// state untouched when any gradient is non-finite.
bool adam_step(AdamState& state, ParamSet& params, const ParamSet& grads);

/// target <- (1 - tau) * target + tau * online.
void polyak_update(ParamSet& target, const ParamSet& online, double tau);

}  // namespace oraclab::nn
