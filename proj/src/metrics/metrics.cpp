#include "eotk/metrics/metrics.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "eotk/core/error.hpp"

namespace eotk::metrics {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_shapes(const LabelMatrix& y_true, const LabelMatrix& y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(Errc::shape_mismatch,
                fmt::format("y_true has {} rows, y_pred has {}", y_true.size(), y_pred.size()));
  }
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i].size() != y_pred[i].size() || y_true[i].size() != y_true.front().size()) {
      throw Error(Errc::shape_mismatch, fmt::format("row {} has mismatched width", i));
    }
  }
}

std::size_t argmax(const LabelVector& row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

ClassCounts ConfusionCounts::pooled() const {
  ClassCounts total;
  for (const auto& c : classes) {
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
    total.tn += c.tn;
  }
  return total;
}

ConfusionCounts confusion_counts(const LabelMatrix& y_true, const LabelMatrix& y_pred) {
  check_shapes(y_true, y_pred);
  ConfusionCounts counts;
  counts.samples = y_true.size();
  const std::size_t k = y_true.empty() ? 0 : y_true.front().size();
  counts.classes.resize(k);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      const auto t = y_true[i][c];
      const auto p = y_pred[i][c];
      if (t > 1 || p > 1) {
        throw Error(Errc::non_binary_input, fmt::format("entry ({}, {}) is not 0/1", i, c));
      }
      auto& cc = counts.classes[c];
      if (t && p) ++cc.tp;
      else if (!t && p) ++cc.fp;
      else if (t && !p) ++cc.fn;
      else ++cc.tn;
    }
  }
  return counts;
}

Scores scores_from(const ClassCounts& c) {
  Scores s;
  s.precision = ratio(c.tp, c.tp + c.fp);
  s.recall = ratio(c.tp, c.tp + c.fn);
  // Harmonic mean expressed on counts: 2tp / (2tp + fp + fn).
  s.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return s;
}

std::vector<Scores> precision_recall_f1(const ConfusionCounts& counts, Averaging averaging) {
  switch (averaging) {
    case Averaging::per_class: {
      std::vector<Scores> out;
      out.reserve(counts.classes.size());
      for (const auto& c : counts.classes) out.push_back(scores_from(c));
      return out;
    }
    case Averaging::micro:
      return {scores_from(counts.pooled())};
    case Averaging::macro: {
      Scores mean;
      if (counts.classes.empty()) return {mean};
      for (const auto& c : counts.classes) {
        const Scores s = scores_from(c);
        mean.precision += s.precision;
        mean.recall += s.recall;
        mean.f1 += s.f1;
      }
      const auto k = static_cast<double>(counts.classes.size());
      mean.precision /= k;
      mean.recall /= k;
      mean.f1 /= k;
      return {mean};
    }
  }
  return {};
}

double accuracy(const LabelMatrix& y_true, const LabelMatrix& y_pred, TaskKind kind) {
  check_shapes(y_true, y_pred);
  if (y_true.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool match = kind == TaskKind::multi_class ? argmax(y_true[i]) == argmax(y_pred[i])
                                                     : y_true[i] == y_pred[i];
    hits += match ? 1 : 0;
  }
  return ratio(hits, y_true.size());
}

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(Errc::shape_mismatch, "label sequences differ in length");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i] ? 1 : 0;
  return ratio(hits, y_true.size());
}

LabelVector decide(std::span<const double> probabilities, double threshold) {
  LabelVector out(probabilities.size(), 0);
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    out[i] = probabilities[i] >= threshold ? 1 : 0;
  }
  return out;
}

double MetricReport::primary() const {
  return kind == TaskKind::multi_label ? micro.f1 : accuracy;
}

std::string MetricReport::primary_name() const {
  return kind == TaskKind::multi_label ? "micro_f1" : "accuracy";
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json out;
  out[kind == TaskKind::multi_label ? "subset_accuracy" : "accuracy"] = accuracy;
  out["micro_precision"] = micro.precision;
  out["micro_recall"] = micro.recall;
  out["micro_f1"] = micro.f1;
  out["macro_precision"] = macro.precision;
  out["macro_recall"] = macro.recall;
  out["macro_f1"] = macro.f1;
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const std::string name = c < class_names.size() ? class_names[c] : fmt::format("class_{}", c);
    per[name] = {{"precision", per_class[c].precision},
                 {"recall", per_class[c].recall},
                 {"f1", per_class[c].f1}};
  }
  out["per_class"] = std::move(per);
  return out;
}

MetricReport evaluate(const LabelMatrix& y_true, const LabelMatrix& y_pred, TaskKind kind,
                      std::vector<std::string> class_names) {
  const ConfusionCounts counts = confusion_counts(y_true, y_pred);
  MetricReport report;
  report.kind = kind;
  report.accuracy = accuracy(y_true, y_pred, kind);
  report.class_names = std::move(class_names);
  report.per_class = precision_recall_f1(counts, Averaging::per_class);
  report.micro = precision_recall_f1(counts, Averaging::micro).front();
  report.macro = precision_recall_f1(counts, Averaging::macro).front();
  return report;
}

}  // namespace eotk::metrics
