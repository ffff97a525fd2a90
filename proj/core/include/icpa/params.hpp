#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace icpa {

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;

  std::size_t size() const;
};

/// A set of named tensors stored back to back in one flat buffer. Matrices are
/// column-major so they can be viewed through Eigen::Map without copies.
class ParamBlock {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape);

  std::size_t size() const { return values_.size(); }
  const std::vector<TensorSpec>& layout() const { return layout_; }
  const TensorSpec& spec(std::size_t id) const { return layout_.at(id); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> tensor(std::size_t id);
  std::span<const double> tensor(std::size_t id) const;

  Eigen::Map<Eigen::MatrixXd> matrix(std::size_t id);
  Eigen::Map<const Eigen::MatrixXd> matrix(std::size_t id) const;

  bool all_finite() const;
  /// FNV-1a over the raw bytes of every value.
  std::uint64_t hash() const;

  std::vector<double> zeros_like() const { return std::vector<double>(values_.size(), 0.0); }

 private:
  std::vector<TensorSpec> layout_;
  std::vector<double> values_;
};

using Gradient = std::vector<double>;

Eigen::Map<Eigen::MatrixXd> grad_matrix(Gradient& grad, const TensorSpec& spec);

/// Adagrad: accumulates squared gradients per parameter.
class Adagrad {
 public:
  Adagrad(std::size_t size, double learning_rate, double initial_accumulator = 0.1,
          double epsilon = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);

  double learning_rate() const { return learning_rate_; }
  std::span<const double> accumulator() const { return accum_; }

 private:
  double learning_rate_;
  double epsilon_;
  std::vector<double> accum_;
};

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace icpa
