#include "doge/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace doge::nn {

namespace {

constexpr char kMagic[8] = {'D', 'O', 'G', 'E', 'M', 'L', 'P', '1'};

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) {
    throw InvalidArgument("MlpModel: need at least input and output widths");
  }
  for (int d : dims) {
    if (d <= 0) {
      throw InvalidArgument("MlpModel: layer widths must be positive");
    }
  }
}

}  // namespace

MlpModel::MlpModel(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
  check_dims(dims_);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    params_.push_back(Matrix::Zero(dims_[l + 1], dims_[l]));
    params_.push_back(Matrix::Zero(dims_[l + 1], 1));
  }
}

MlpModel MlpModel::init(std::vector<int> layer_dims, Rng& rng) {
  MlpModel m(std::move(layer_dims));
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.dims_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto* p : {&m.weight(l), &m.bias(l)}) {
      for (Eigen::Index j = 0; j < p->cols(); ++j) {
        for (Eigen::Index i = 0; i < p->rows(); ++i) {
          (*p)(i, j) = u(rng);
        }
      }
    }
  }
  return m;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    n += static_cast<std::size_t>(p.size());
  }
  return n;
}

bool MlpModel::all_finite() const {
  for (const auto& p : params_) {
    if (!p.allFinite()) {
      return false;
    }
  }
  return true;
}

Matrix forward_batch(const MlpModel& model, const Matrix& inputs) {
  if (inputs.rows() != model.input_dim()) {
    throw InvalidArgument("forward: expected input dim " + std::to_string(model.input_dim()) +
                          ", got " + std::to_string(inputs.rows()));
  }
  Matrix h = inputs;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    Matrix z = model.weight(l) * h;
    z.colwise() += model.bias(l).col(0);
    if (l + 1 < model.num_layers()) {
      z = z.cwiseMax(0.0);
    }
    h = std::move(z);
  }
  return h;
}

Vec forward(const MlpModel& model, const Vec& input) {
  return forward_batch(model, Matrix(input)).col(0);
}

Bound bind(ad::Tape& tape, const MlpModel& model, bool trainable) {
  Bound b;
  b.params.reserve(model.params().size());
  for (const auto& p : model.params()) {
    b.params.push_back(tape.leaf(p, trainable));
  }
  return b;
}

ad::Var apply(const Bound& bound, ad::Var input) {
  const std::size_t layers = bound.params.size() / 2;
  ad::Var h = input;
  for (std::size_t l = 0; l < layers; ++l) {
    h = ad::add_bias(ad::matmul(bound.params[2 * l], h), bound.params[2 * l + 1]);
    if (l + 1 < layers) {
      h = ad::relu(h);
    }
  }
  return h;
}

GradSet gradients(const ad::Tape& tape, const Bound& bound) {
  GradSet g;
  g.reserve(bound.params.size());
  for (const auto& v : bound.params) {
    g.push_back(tape.grad(v));
  }
  return g;
}

MseResult grad_mse(const MlpModel& model, const Matrix& inputs, const Matrix& targets) {
  if (inputs.cols() == 0) {
    throw InvalidArgument("grad_mse: empty batch");
  }
  if (targets.rows() != model.output_dim() || targets.cols() != inputs.cols()) {
    throw InvalidArgument("grad_mse: target shape does not match model output");
  }
  ad::Tape tape;
  const Bound b = bind(tape, model, true);
  ad::Var x = tape.constant(inputs);
  ad::Var y = tape.constant(targets);
  ad::Var loss = ad::mean(ad::square(ad::sub(apply(b, x), y)));
  tape.backward(loss);
  MseResult r{loss.value()(0, 0), gradients(tape, b)};
  if (!std::isfinite(r.loss)) {
    throw Divergence("grad_mse: non-finite loss");
  }
  for (const auto& g : r.grads) {
    if (!g.allFinite()) {
      throw Divergence("grad_mse: non-finite gradient");
    }
  }
  return r;
}

OptimState OptimState::for_model(const MlpModel& model, double lr) {
  OptimState s;
  s.lr = lr;
  for (const auto& p : model.params()) {
    s.m.push_back(Matrix::Zero(p.rows(), p.cols()));
    s.v.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  return s;
}

void adam_step(MlpModel& model, const GradSet& grads, OptimState& opt) {
  auto& params = model.params();
  if (grads.size() != params.size() || opt.m.size() != params.size()) {
    throw InvalidArgument("adam_step: gradient/moment count does not match model");
  }
  ++opt.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols()) {
      throw InvalidArgument("adam_step: gradient shape mismatch");
    }
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * grads[i];
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * grads[i].cwiseAbs2();
    params[i].array() -=
        opt.lr * (opt.m[i].array() / c1) / ((opt.v[i].array() / c2).sqrt() + opt.eps);
  }
}

void soft_update(MlpModel& target, const MlpModel& online, double tau) {
  if (!target.same_architecture(online)) {
    throw InvalidArgument("soft_update: architectures differ");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw InvalidArgument("soft_update: tau must lie in [0, 1]");
  }
  for (std::size_t i = 0; i < target.params().size(); ++i) {
    if (tau == 1.0) {
      target.params()[i] = online.params()[i];
    } else {
      target.params()[i] = tau * online.params()[i] + (1.0 - tau) * target.params()[i];
    }
  }
}

void save(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out.write(kMagic, sizeof(kMagic));
  const auto n = static_cast<std::uint32_t>(model.layer_dims().size());
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (int d : model.layer_dims()) {
    const auto u = static_cast<std::uint32_t>(d);
    out.write(reinterpret_cast<const char*>(&u), sizeof(u));
  }
  for (const auto& p : model.params()) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const double v = p(i, j);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
    }
  }
  if (!out) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

MlpModel load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not a parameter file");
  }
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n < 2 || n > 64) {
    throw std::runtime_error(path.string() + ": bad layer count");
  }
  std::vector<int> dims(n);
  for (auto& d : dims) {
    std::uint32_t u = 0;
    in.read(reinterpret_cast<char*>(&u), sizeof(u));
    d = static_cast<int>(u);
  }
  MlpModel m(dims);
  for (auto& p : m.params()) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        in.read(reinterpret_cast<char*>(&p(i, j)), sizeof(double));
      }
    }
  }
  if (!in) {
    throw std::runtime_error(path.string() + ": truncated parameter file");
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw std::runtime_error(path.string() + ": trailing bytes after parameters");
  }
  return m;
}

}  // namespace doge::nn
