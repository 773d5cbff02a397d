#include "eotk/models/loss.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "eotk/core/error.hpp"

namespace eotk {

namespace {

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_rows(const Matrix& logits, const std::vector<Target>& targets) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size()) {
    throw Error(Errc::shape_mismatch,
                fmt::format("{} logit rows but {} targets", logits.rows(), targets.size()));
  }
}

std::pair<double, Matrix> evaluate(const Matrix& logits, const std::vector<Target>& targets, TaskKind kind) {
  check_rows(logits, targets);
  const auto n = logits.rows();
  const auto k = logits.cols();
  Matrix grad(n, k);
  if (n == 0) return {0.0, grad};
  double total = 0.0;
  if (kind == TaskKind::multi_class) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const int t = to_class_index(targets[static_cast<std::size_t>(i)]);
      if (t < 0 || t >= k) {
        throw Error(Errc::index_out_of_range, fmt::format("class index {} outside [0, {})", t, k));
      }
      const double m = logits.row(i).maxCoeff();
      double sum = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) sum += std::exp(logits(i, j) - m);
      const double lse = m + std::log(sum);
      total += lse - logits(i, t);
      for (Eigen::Index j = 0; j < k; ++j) {
        grad(i, j) = (std::exp(logits(i, j) - lse) - (j == t ? 1.0 : 0.0)) / static_cast<double>(n);
      }
    }
    return {total / static_cast<double>(n), grad};
  }
  const double scale = static_cast<double>(n) * static_cast<double>(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const LabelVector y = to_label_vector(targets[static_cast<std::size_t>(i)], static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) {
      if (y[j] > 1) throw Error(Errc::non_binary_input, "multi-label targets must be 0/1");
      const double p = stable_sigmoid(logits(i, j));
      const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
      total -= y[j] ? std::log(pc) : std::log(1.0 - pc);
      grad(i, j) = (p - y[j]) / scale;
    }
  }
  return {total / scale, grad};
}

}  // namespace

double compute_loss(const Matrix& logits, const std::vector<Target>& targets, TaskKind kind) {
  return evaluate(logits, targets, kind).first;
}

std::pair<double, Matrix> loss_with_gradient(const Matrix& logits, const std::vector<Target>& targets,
                                             TaskKind kind) {
  return evaluate(logits, targets, kind);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) sum += (out(i, j) = std::exp(logits(i, j) - m));
    out.row(i) /= sum;
  }
  return out;
}

Matrix sigmoid(const Matrix& logits) { return logits.unaryExpr([](double z) { return stable_sigmoid(z); }); }

Matrix probabilities(const Matrix& logits, TaskKind kind) {
  return kind == TaskKind::multi_class ? softmax_rows(logits) : sigmoid(logits);
}

}  // namespace eotk
