#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "taseq/common.hpp"

namespace taseq {

// Dense row-major tensor of doubles. Plain value type; all arithmetic lives
// in the graph module so every operation there can register its gradient.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> dims)
      : shape(std::move(dims)), data(count_(shape), 0.0) {}

  Tensor(std::vector<std::size_t> dims, std::vector<double> values)
      : shape(std::move(dims)), data(std::move(values)) {
    if (data.size() != count_(shape))
      throw DimensionError("Tensor: data length does not match shape");
  }

  static Tensor zeros(std::vector<std::size_t> dims) {
    return Tensor(std::move(dims));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
  }

  std::size_t numel() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }

  std::size_t rows() const {
    if (!is_matrix()) throw DimensionError("Tensor::rows: not a matrix");
    return shape[0];
  }
  std::size_t cols() const {
    if (!is_matrix()) throw DimensionError("Tensor::cols: not a matrix");
    return shape[1];
  }

  double& operator()(std::size_t i) { return data[i]; }
  double operator()(std::size_t i) const { return data[i]; }
  double& operator()(std::size_t i, std::size_t j) {
    return data[i * shape[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * shape[1] + j];
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

 private:
  static std::size_t count_(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return dims.empty() ? 0 : n;
  }
};

// Named trainable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string id, Tensor v)
      : name(std::move(id)), value(std::move(v)), grad(value.shape) {}

  void zero_grad() { grad.fill(0.0); }
};

// I.i.d. zero-mean Gaussian samples, deterministic per seed.
inline Tensor init_gaussian(std::vector<std::size_t> dims, double stddev,
                            std::uint64_t seed) {
  if (!(stddev > 0.0)) throw ContractError("init_gaussian: stddev must be > 0");
  Tensor t(std::move(dims));
  Rng rng(seed);
  for (double& v : t.data) v = rng.gaussian(0.0, stddev);
  return t;
}

}  // namespace taseq
