#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace eotk {

/// Row-major dense matrix used for logits, features and layer algebra.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  static Tensor zeros(std::vector<std::size_t> shape);
  std::size_t numel() const noexcept { return values.size(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct Parameter {
  std::string name;
  Tensor tensor;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Named tensors in a fixed, architecture-defined order.
using ParameterSet = std::vector<Parameter>;

ParameterSet zeros_like(const ParameterSet& params);

/// Total number of scalars.
std::size_t parameter_count(const ParameterSet& params);

/// Little-endian binary serialization (versioned) and SHA-256 of that blob.
std::vector<char> serialize_parameters(const ParameterSet& params);
ParameterSet deserialize_parameters(const std::vector<char>& blob);
std::string parameter_checksum(const ParameterSet& params);

}  // namespace eotk
