#pragma once

#include <utility>
#include <vector>

#include "eotk/core/types.hpp"
#include "eotk/models/tensor.hpp"

namespace eotk {

inline constexpr double kProbabilityClamp = 1e-7;

/// Multi-class: mean softmax cross-entropy over rows. Multi-label: mean over
/// rows and classes of binary cross-entropy on sigmoid probabilities clamped
/// to [1e-7, 1 - 1e-7]. Throws ShapeMismatch, IndexOutOfRange, NonBinaryInput.
double compute_loss(const Matrix& logits, const std::vector<Target>& targets, TaskKind kind);

/// Loss and its gradient with respect to the logits. The multi-label gradient
/// is the unclamped (sigmoid - y) / (N K).
std::pair<double, Matrix> loss_with_gradient(const Matrix& logits, const std::vector<Target>& targets,
                                             TaskKind kind);

Matrix softmax_rows(const Matrix& logits);
Matrix sigmoid(const Matrix& logits);

/// Softmax (multi-class) or sigmoid (multi-label) probabilities.
Matrix probabilities(const Matrix& logits, TaskKind kind);

}  // namespace eotk
