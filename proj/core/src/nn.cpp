#include "oraclab/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace oraclab::nn {

namespace {

constexpr double kLayerNormEps = 1e-5;

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementation.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t arrays_per_layer(const MlpSpec& spec, std::size_t layer) {
  const bool hidden = layer < spec.hidden.size();
  return (hidden && spec.layer_norm) ? 4 : 2;
}

void check_params(const MlpSpec& spec, std::span<const NamedArray> params) {
  if (params.size() != spec.array_count()) {
    throw std::invalid_argument("parameter set does not match network spec");
  }
}

}  // namespace

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("MlpSpec: dims must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("MlpSpec: hidden widths must be >= 1");
  }
}

std::size_t MlpSpec::array_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < layer_count(); ++l) n += arrays_per_layer(*this, l);
  return n;
}

std::size_t MlpSpec::parameter_count() const {
  std::size_t n = 0;
  int fan_in = input_dim;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const int width = l < hidden.size() ? hidden[l] : output_dim;
    n += static_cast<std::size_t>(width) * static_cast<std::size_t>(fan_in + 1);
    if (l < hidden.size() && layer_norm) n += 2 * static_cast<std::size_t>(width);
    fan_in = width;
  }
  return n;
}

void ParamSet::append(const ParamSet& other, const std::string& prefix) {
  for (const auto& a : other.arrays_) arrays_.push_back({prefix + a.name, a.value});
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  out.arrays_.reserve(arrays_.size());
  for (const auto& a : arrays_) out.arrays_.push_back({a.name, Matrix::Zero(a.value.rows(), a.value.cols())});
  return out;
}

bool ParamSet::same_shape(const ParamSet& other) const {
  if (arrays_.size() != other.arrays_.size()) return false;
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    if (arrays_[i].value.rows() != other.arrays_[i].value.rows() ||
        arrays_[i].value.cols() != other.arrays_[i].value.cols()) {
      return false;
    }
  }
  return true;
}

bool ParamSet::all_finite() const {
  for (const auto& a : arrays_) {
    if (!a.value.allFinite()) return false;
  }
  return true;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& a : arrays_) n += static_cast<std::size_t>(a.value.size());
  return n;
}

void ParamSet::axpy(double scale, const ParamSet& other) {
  if (!same_shape(other)) throw std::invalid_argument("ParamSet::axpy: shape mismatch");
  for (std::size_t i = 0; i < arrays_.size(); ++i) arrays_[i].value += scale * other.arrays_[i].value;
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (!same_shape(other)) return false;
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    if (arrays_[i].name != other.arrays_[i].name || arrays_[i].value != other.arrays_[i].value) return false;
  }
  return true;
}

ParamSet init_params(const MlpSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.init_seed);
  std::vector<NamedArray> arrays;
  int fan_in = spec.input_dim;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const bool hidden = l < spec.hidden.size();
    const int width = hidden ? spec.hidden[l] : spec.output_dim;
    const double bound = (hidden ? 1.0 : spec.output_scale) / std::sqrt(static_cast<double>(fan_in));
    const std::string prefix = "layer" + std::to_string(l) + ".";

    Matrix w(width, fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = bound * (2.0 * unit_uniform(rng) - 1.0);
    Matrix b(width, 1);
    for (Eigen::Index r = 0; r < b.rows(); ++r) b(r, 0) = bound * (2.0 * unit_uniform(rng) - 1.0);

    arrays.push_back({prefix + "weight", std::move(w)});
    arrays.push_back({prefix + "bias", std::move(b)});
    if (hidden && spec.layer_norm) {
      arrays.push_back({prefix + "ln_gain", Matrix::Ones(width, 1)});
      arrays.push_back({prefix + "ln_shift", Matrix::Zero(width, 1)});
    }
    fan_in = width;
  }
  return ParamSet(std::move(arrays));
}

Matrix forward(const MlpSpec& spec, std::span<const NamedArray> params, const Matrix& input, ForwardCache* cache) {
  check_params(spec, params);
  if (input.rows() != spec.input_dim) throw std::invalid_argument("forward: input dimension mismatch");

  if (cache) {
    cache->input = input;
    cache->normalized.assign(spec.hidden.size(), Matrix());
    cache->inv_std.assign(spec.hidden.size(), Eigen::RowVectorXd());
    cache->activations.assign(spec.hidden.size(), Matrix());
    cache->preactivations.assign(spec.hidden.size(), Matrix());
  }

  Matrix x = input;
  std::size_t idx = 0;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const Matrix& w = params[idx].value;
    const Matrix& b = params[idx + 1].value;
    Matrix z(w.rows(), x.cols());
    z.noalias() = w * x;
    z.colwise() += b.col(0);

    if (l == spec.hidden.size()) return z;

    if (spec.layer_norm) {
      const Matrix& gain = params[idx + 2].value;
      const Matrix& shift = params[idx + 3].value;
      const double n = static_cast<double>(z.rows());
      const Eigen::RowVectorXd mean = z.colwise().sum() / n;
      z.rowwise() -= mean;
      const Eigen::RowVectorXd var = z.array().square().colwise().sum() / n;
      const Eigen::RowVectorXd inv_std = (var.array() + kLayerNormEps).rsqrt();
      z.array().rowwise() *= inv_std.array();
      if (cache) {
        cache->normalized[l] = z;
        cache->inv_std[l] = inv_std;
      }
      z.array().colwise() *= gain.col(0).array();
      z.colwise() += shift.col(0);
    }
    if (cache) cache->preactivations[l] = z;
    x = z.cwiseMax(0.0);
    if (cache) cache->activations[l] = x;
    idx += arrays_per_layer(spec, l);
  }
  return x;  // unreachable: the output layer returns above
}

Gradients backward(const MlpSpec& spec, std::span<const NamedArray> params, const ForwardCache& cache,
                   const Matrix& upstream, bool want_params) {
  check_params(spec, params);
  if (upstream.rows() != spec.output_dim || upstream.cols() != cache.input.cols()) {
    throw std::invalid_argument("backward: upstream shape mismatch");
  }

  // Array offsets per layer.
  std::vector<std::size_t> offset(spec.layer_count());
  {
    std::size_t idx = 0;
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
      offset[l] = idx;
      idx += arrays_per_layer(spec, l);
    }
  }

  Gradients out;
  std::vector<NamedArray> grads(params.size());
  Matrix delta = upstream;  // gradient w.r.t. the current layer's linear output
  for (std::size_t li = spec.layer_count(); li-- > 0;) {
    const std::size_t idx = offset[li];
    const Matrix& layer_input = li == 0 ? cache.input : cache.activations[li - 1];
    const Matrix& w = params[idx].value;

    if (li < spec.hidden.size()) {
      // delta currently holds d/d(post-ReLU activation).
      delta.array() *= (cache.preactivations[li].array() > 0.0).cast<double>();
      if (spec.layer_norm) {
        const Matrix& gain = params[idx + 2].value;
        const Matrix& xhat = cache.normalized[li];
        if (want_params) {
          grads[idx + 2] = {params[idx + 2].name, (delta.cwiseProduct(xhat)).rowwise().sum()};
          grads[idx + 3] = {params[idx + 3].name, delta.rowwise().sum()};
        }
        Matrix dxhat = delta.array().colwise() * gain.col(0).array();
        const double n = static_cast<double>(dxhat.rows());
        const Eigen::RowVectorXd sum_dx = dxhat.colwise().sum();
        const Eigen::RowVectorXd sum_dx_xhat = dxhat.cwiseProduct(xhat).colwise().sum();
        Matrix dz = n * dxhat;
        dz.rowwise() -= sum_dx;
        Matrix correction = xhat;
        correction.array().rowwise() *= sum_dx_xhat.array();
        dz -= correction;
        dz.array().rowwise() *= (cache.inv_std[li].array() / n);
        delta = std::move(dz);
      }
    }

    if (want_params) {
      Matrix dw(w.rows(), w.cols());
      dw.noalias() = delta * layer_input.transpose();
      grads[idx] = {params[idx].name, std::move(dw)};
      grads[idx + 1] = {params[idx + 1].name, delta.rowwise().sum()};
    }
    Matrix next(w.cols(), delta.cols());
    next.noalias() = w.transpose() * delta;
    delta = std::move(next);
  }
  out.input = std::move(delta);
  if (want_params) out.params = ParamSet(std::move(grads));
  return out;
}

Vector forward(const MlpSpec& spec, const ParamSet& params, const Vector& input) {
  return forward(spec, params.view(), Matrix(input), nullptr).col(0);
}

ParamSet grad_params(const MlpSpec& spec, const ParamSet& params, const Vector& input, const Vector& upstream) {
  ForwardCache cache;
  forward(spec, params.view(), Matrix(input), &cache);
  return backward(spec, params.view(), cache, Matrix(upstream), true).params;
}

Vector grad_input(const MlpSpec& spec, const ParamSet& params, const Vector& input, const Vector& upstream) {
  ForwardCache cache;
  forward(spec, params.view(), Matrix(input), &cache);
  return backward(spec, params.view(), cache, Matrix(upstream), false).input.col(0);
}

AdamState AdamState::for_params(const ParamSet& params, double lr) {
  AdamState s;
  s.first_moment = params.zeros_like();
  s.second_moment = params.zeros_like();
  s.lr = lr;
  return s;
}

bool adam_step(AdamState& state, ParamSet& params, const ParamSet& grads) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment)) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  if (!grads.all_finite()) return false;

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.first_moment[i].value.array();
    auto v = state.second_moment[i].value.array();
    const auto g = grads[i].value.array();
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.square();
    params[i].value.array() -= state.lr * (m / c1) / ((v / c2).sqrt() + state.epsilon);
  }
  return true;
}

void polyak_update(ParamSet& target, const ParamSet& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("polyak_update: tau must lie in (0, 1]");
  if (!target.same_shape(online)) throw std::invalid_argument("polyak_update: shape mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (tau == 1.0) {
      target[i].value = online[i].value;
    } else {
      target[i].value = (1.0 - tau) * target[i].value + tau * online[i].value;
    }
  }
}

}  // namespace oraclab::nn
