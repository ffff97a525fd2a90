#include "icpa/params.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "icpa/error.hpp"

namespace icpa {

std::size_t TensorSpec::size() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t ParamBlock::add(std::string name, std::vector<std::size_t> shape) {
  TensorSpec spec{std::move(name), std::move(shape), values_.size()};
  values_.resize(values_.size() + spec.size(), 0.0);
  layout_.push_back(std::move(spec));
  return layout_.size() - 1;
}

std::span<double> ParamBlock::tensor(std::size_t id) {
  const auto& s = layout_.at(id);
  return std::span<double>(values_).subspan(s.offset, s.size());
}

std::span<const double> ParamBlock::tensor(std::size_t id) const {
  const auto& s = layout_.at(id);
  return std::span<const double>(values_).subspan(s.offset, s.size());
}

namespace {
std::pair<Eigen::Index, Eigen::Index> matrix_dims(const TensorSpec& s) {
  if (s.shape.size() == 1) return {static_cast<Eigen::Index>(s.shape[0]), 1};
  if (s.shape.size() != 2) throw ValidationError("tensor '" + s.name + "' is not a matrix");
  return {static_cast<Eigen::Index>(s.shape[0]), static_cast<Eigen::Index>(s.shape[1])};
}
}  // namespace

Eigen::Map<Eigen::MatrixXd> ParamBlock::matrix(std::size_t id) {
  const auto& s = layout_.at(id);
  auto [r, c] = matrix_dims(s);
  return Eigen::Map<Eigen::MatrixXd>(values_.data() + s.offset, r, c);
}

Eigen::Map<const Eigen::MatrixXd> ParamBlock::matrix(std::size_t id) const {
  const auto& s = layout_.at(id);
  auto [r, c] = matrix_dims(s);
  return Eigen::Map<const Eigen::MatrixXd>(values_.data() + s.offset, r, c);
}

bool ParamBlock::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::uint64_t ParamBlock::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values_) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

Eigen::Map<Eigen::MatrixXd> grad_matrix(Gradient& grad, const TensorSpec& s) {
  auto [r, c] = matrix_dims(s);
  return Eigen::Map<Eigen::MatrixXd>(grad.data() + s.offset, r, c);
}

Adagrad::Adagrad(std::size_t size, double learning_rate, double initial_accumulator,
                 double epsilon)
    : learning_rate_(learning_rate), epsilon_(epsilon), accum_(size, initial_accumulator) {}

void Adagrad::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != accum_.size() || grad.size() != accum_.size())
    throw ValidationError("Adagrad: size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;
    accum_[i] += g * g;
    params[i] -= learning_rate_ * g / (std::sqrt(accum_[i]) + epsilon_);
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace icpa
