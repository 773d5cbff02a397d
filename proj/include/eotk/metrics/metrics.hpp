#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eotk/core/types.hpp"

namespace eotk::metrics {

/// N rows of length-K binary label vectors.
using LabelMatrix = std::vector<LabelVector>;

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct ConfusionCounts {
  std::vector<ClassCounts> classes;
  std::size_t samples = 0;

  /// Counts pooled over classes.
  ClassCounts pooled() const;
};

/// Per-class counts. Throws ShapeMismatch on unequal shapes and
/// NonBinaryInput on entries other than 0/1.
ConfusionCounts confusion_counts(const LabelMatrix& y_true, const LabelMatrix& y_pred);

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class Averaging { per_class, micro, macro };

/// Precision, recall and F1 with 0/0 taken as 0. `per_class` yields K
/// entries; `micro` (pooled counts) and `macro` (mean of per-class values)
/// yield one.
std::vector<Scores> precision_recall_f1(const ConfusionCounts& counts, Averaging averaging);

Scores scores_from(const ClassCounts& counts);

/// Multi-class: fraction of rows whose argmax agrees. Multi-label: subset
/// accuracy, the fraction of rows matching exactly.
double accuracy(const LabelMatrix& y_true, const LabelMatrix& y_pred, TaskKind kind);

/// Multi-class accuracy over class indices.
double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

/// Thresholded decisions: positive iff probability >= threshold.
LabelVector decide(std::span<const double> probabilities, double threshold);

struct MetricReport {
  TaskKind kind = TaskKind::multi_label;
  double accuracy = 0.0;  ///< subset accuracy for multi-label
  std::vector<std::string> class_names;
  std::vector<Scores> per_class;
  Scores micro;
  Scores macro;

  /// micro-F1 for multi-label, accuracy for multi-class.
  double primary() const;
  std::string primary_name() const;

  /// Flat metric-name -> value map plus a `per_class` object.
  nlohmann::json to_json() const;
};

MetricReport evaluate(const LabelMatrix& y_true, const LabelMatrix& y_pred, TaskKind kind,
                      std::vector<std::string> class_names);

}  // namespace eotk::metrics
