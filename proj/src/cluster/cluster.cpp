#include "eotk/cluster/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "eotk/core/error.hpp"
#include "eotk/core/parallel.hpp"
#include "eotk/core/random.hpp"
#include "eotk/datasets/loader.hpp"
#include "eotk/models/loss.hpp"
#include "eotk/models/optimizer.hpp"
#include "eotk/models/trainer.hpp"

namespace eotk::cluster {

namespace {

double squared_distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double d = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double diff = a(i, c) - b(j, c);
    d += diff * diff;
  }
  return d;
}

std::vector<std::size_t> canonical_order(std::size_t n, std::span<const std::string> ids) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!ids.empty()) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  }
  return order;
}

Matrix kmeanspp(const Matrix& x, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  Matrix centroids(static_cast<Eigen::Index>(k), x.cols());
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.below(n);
  centroids.row(0) = x.row(static_cast<Eigen::Index>(first));
  chosen[first] = true;
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x, static_cast<Eigen::Index>(i), centroids,
                                               static_cast<Eigen::Index>(c - 1)));
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // All remaining points coincide with a centroid; take an unused one.
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) unused.push_back(i);
      }
      pick = unused[rng.below(unused.size())];
    }
    chosen[pick] = true;
    centroids.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(pick));
  }
  return centroids;
}

double entropy_term(double count, double n) { return count > 0.0 ? -(count / n) * std::log(count / n) : 0.0; }

}  // namespace

void l2_normalize_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm > 0.0) m.row(i) /= norm;
  }
}

FeatureMatrix extract_features(const Model& model, const Dataset& dataset) {
  FeatureMatrix out;
  out.values.resize(static_cast<Eigen::Index>(dataset.size()), model.network().feature_dim());
  Eigen::Index row = 0;
  BatchStream stream(dataset, BatchOptions::evaluation(dataset));
  while (auto batch = stream.next()) {
    const Matrix f = model.network().features(batch->images);
    out.values.middleRows(row, f.rows()) = f;
    row += f.rows();
    for (auto& id : batch->ids) out.ids.push_back(std::move(id));
  }
  l2_normalize_rows(out.values);
  return out;
}

void write_features_csv(const FeatureMatrix& features, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, fmt::format("cannot write '{}'", path.string()));
  out << "id";
  for (Eigen::Index c = 0; c < features.values.cols(); ++c) out << ",f" << c;
  out << '\n';
  for (Eigen::Index i = 0; i < features.values.rows(); ++i) {
    out << features.ids[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < features.values.cols(); ++c) out << fmt::format(",{:.17g}", features.values(i, c));
    out << '\n';
  }
  if (!out) throw Error(Errc::io_error, fmt::format("write to '{}' failed", path.string()));
}

ClusterAssignment kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iter,
                         std::span<const std::string> ids) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k < 1 || k > n) throw Error(Errc::invalid_params, fmt::format("k={} must lie in [1, {}]", k, n), "k");
  if (max_iter < 1) throw Error(Errc::invalid_params, "max_iter must be >= 1", "max_iter");
  if (!ids.empty() && ids.size() != n) {
    throw Error(Errc::length_mismatch, fmt::format("{} ids for {} points", ids.size(), n));
  }
  if (!points.allFinite()) throw Error(Errc::non_finite_value, "k-means input contains non-finite values");

  const auto order = canonical_order(n, ids);
  Matrix x(points.rows(), points.cols());
  for (std::size_t i = 0; i < n; ++i) x.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(order[i]));

  Rng rng(seed);
  ClusterAssignment result;
  result.centroids = kmeanspp(x, k, rng);
  std::vector<int> labels(n, -1);
  std::vector<double> dist(n, 0.0);

  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    std::vector<int> next(n);
    parallel_for(n, [&](std::size_t i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(x, static_cast<Eigen::Index>(i), result.centroids, static_cast<Eigen::Index>(c));
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      next[i] = best;
      dist[i] = best_d;
    });

    std::vector<std::size_t> sizes(k, 0);
    for (int l : next) ++sizes[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[static_cast<std::size_t>(next[i])] > 1 && (far == n || dist[i] > dist[far])) far = i;
      }
      --sizes[static_cast<std::size_t>(next[far])];
      next[far] = static_cast<int>(c);
      dist[far] = 0.0;
      sizes[c] = 1;
    }

    const bool changed = next != labels;
    labels = std::move(next);
    if (changed) {
      result.centroids.setZero();
      for (std::size_t i = 0; i < n; ++i) result.centroids.row(labels[i]) += x.row(static_cast<Eigen::Index>(i));
      for (std::size_t c = 0; c < k; ++c) result.centroids.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(sizes[c]);
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += squared_distance(x, static_cast<Eigen::Index>(i), result.centroids, labels[i]);
    }
    result.inertia_history.push_back(inertia);
    result.iterations = iter;
    if (!changed) {
      result.converged = true;
      break;
    }
  }

  result.inertia = result.inertia_history.back();
  result.labels.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) result.labels[order[i]] = labels[i];
  return result;
}

double nmi(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(Errc::length_mismatch, fmt::format("labelings of length {} and {}", a.size(), b.size()));
  if (a.empty()) return 0.0;
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  if (ca.size() < 2 || cb.size() < 2) return 0.0;
  // A bijective contingency table means the labelings agree up to renaming.
  if (joint.size() == ca.size() && joint.size() == cb.size()) return 1.0;

  const double n = static_cast<double>(a.size());
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (const auto& [label, count] : ca) ha += entropy_term(count, n);
  for (const auto& [label, count] : cb) hb += entropy_term(count, n);
  for (const auto& [key, count] : joint) {
    mi += (count / n) * std::log(count * n / (ca[key.first] * cb[key.second]));
  }
  return std::clamp(2.0 * mi / (ha + hb), 0.0, 1.0);
}

namespace {

std::vector<std::string> cluster_names(std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < k; ++c) names.push_back(fmt::format("cluster_{}", c));
  return names;
}

DatasetConfig without_target_transforms(DatasetConfig config) {
  config.target_transforms.clear();
  return config;
}

}  // namespace

PseudoLabeledDataset::PseudoLabeledDataset(const Dataset& base, std::vector<int> labels, std::size_t k,
                                           std::vector<std::size_t> indices)
    : Dataset(TaskKind::multi_class, LabelVocabulary(cluster_names(k)), without_target_transforms(base.config())),
      base_(base), indices_(std::move(indices)) {
  if (indices_.empty()) {
    indices_.resize(base.size());
    std::iota(indices_.begin(), indices_.end(), std::size_t{0});
  }
  for (std::size_t i : indices_) {
    if (i >= base.size()) throw Error(Errc::index_out_of_range, "resampled index outside the base dataset");
  }
  if (labels.size() != base.size()) {
    throw Error(Errc::length_mismatch, fmt::format("{} pseudo-labels for {} samples", labels.size(), base.size()));
  }
  targets_.reserve(labels.size());
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= k) throw Error(Errc::index_out_of_range, "pseudo-label outside [0, k)");
    targets_.emplace_back(l);
  }
}

const std::string& PseudoLabeledDataset::id(std::size_t index) const {
  check_index(index);
  return base_.id(indices_[index]);
}

const Target& PseudoLabeledDataset::raw_target(std::size_t index) const {
  check_index(index);
  return targets_[indices_[index]];
}

Image PseudoLabeledDataset::load_image(std::size_t index) const {
  check_index(index);
  return base_.load_image(indices_[index]);
}

std::vector<std::size_t> balanced_indices(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < labels.size(); ++i) members[static_cast<std::size_t>(labels[i])].push_back(i);
  std::size_t non_empty = 0;
  for (const auto& m : members) non_empty += m.empty() ? 0 : 1;
  std::vector<std::size_t> out;
  if (non_empty == 0) return out;
  const std::size_t per_cluster = labels.size() / non_empty + 1;
  Rng rng(seed);
  for (const auto& m : members) {
    if (m.empty()) continue;
    for (std::size_t j = 0; j < per_cluster; ++j) out.push_back(m[rng.below(m.size())]);
  }
  // Trim to N, then restore a deterministic interleaving for the loader.
  const auto perm = random_permutation(out.size(), rng);
  std::vector<std::size_t> shuffled;
  shuffled.reserve(labels.size());
  for (std::size_t j = 0; j < labels.size(); ++j) shuffled.push_back(out[perm[j]]);
  return shuffled;
}

std::vector<CycleReport> deepcluster_pretrain(Model& model, const Dataset& dataset, const DeepClusterOptions& options) {
  if (options.k < 2) throw Error(Errc::invalid_params, "k must be >= 2", "k");
  if (options.epochs_per_cycle < 1) throw Error(Errc::invalid_params, "epochs_per_cycle must be >= 1", "epochs_per_cycle");
  std::vector<CycleReport> report;
  if (options.cycles == 0) return report;

  std::vector<int> previous;
  std::uint64_t step = 0;
  for (std::size_t cycle = 1; cycle <= options.cycles; ++cycle) {
    const std::uint64_t cycle_seed = derive_seed(options.seed, "cluster", static_cast<std::uint64_t>(cycle));
    const FeatureMatrix features = extract_features(model, dataset);
    const ClusterAssignment assignment = kmeans(features.values, options.k, cycle_seed, options.max_iter, features.ids);

    CycleReport row;
    row.cycle = cycle;
    row.inertia = assignment.inertia;
    row.kmeans_iterations = assignment.iterations;
    if (!previous.empty()) row.nmi_vs_prev = nmi(assignment.labels, previous);
    previous = assignment.labels;

    model.network().reset_head(static_cast<int>(options.k), derive_seed(cycle_seed, "head"));
    PseudoLabeledDataset pseudo(dataset, assignment.labels, options.k,
                                options.balanced ? balanced_indices(assignment.labels, options.k, derive_seed(cycle_seed, "sample")) : std::vector<std::size_t>{});
    Adam optimizer(model.network().parameters(), model.config().learning_rate);
    double loss_sum = 0.0;
    for (std::size_t epoch = 1; epoch <= options.epochs_per_cycle; ++epoch) {
      loss_sum += train_epoch(model, optimizer, pseudo, TaskKind::multi_class, cycle_seed, epoch, step);
    }
    row.mean_train_loss = loss_sum / static_cast<double>(options.epochs_per_cycle);

    if (options.log != nullptr) {
      options.log->log_scalar(options.run_id, cycle, cycle, "cluster/inertia", row.inertia);
      if (row.nmi_vs_prev) options.log->log_scalar(options.run_id, cycle, cycle, "cluster/nmi_vs_prev", *row.nmi_vs_prev);
      options.log->log_scalar(options.run_id, cycle, cycle, "cluster/train_loss", row.mean_train_loss);
    }
    if (options.progress != nullptr) {
      fmt::print(*options.progress, "cycle {}/{}  inertia {:.4f}  nmi_vs_prev {}  train_loss {:.4f}\n", cycle,
                 options.cycles, row.inertia, row.nmi_vs_prev ? fmt::format("{:.4f}", *row.nmi_vs_prev) : "-",
                 row.mean_train_loss);
    }
    report.push_back(row);
  }
  model.network().reset_head(model.num_classes(), derive_seed(options.seed, "cluster", "final-head"));
  return report;
}

void write_cycle_report_csv(const std::vector<CycleReport>& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, fmt::format("cannot write '{}'", path.string()));
  out << "cycle,inertia,nmi_vs_prev,mean_train_loss\n";
  for (const auto& r : report) {
    out << fmt::format("{},{:.17g},{},{:.17g}\n", r.cycle, r.inertia,
                       r.nmi_vs_prev ? fmt::format("{:.17g}", *r.nmi_vs_prev) : "", r.mean_train_loss);
  }
  if (!out) throw Error(Errc::io_error, fmt::format("write to '{}' failed", path.string()));
}

ProbeResult linear_probe(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                         std::span<const int> test_y, const ProbeOptions& options) {
  if (static_cast<std::size_t>(train_x.rows()) != train_y.size() ||
      static_cast<std::size_t>(test_x.rows()) != test_y.size()) {
    throw Error(Errc::length_mismatch, "probe features and labels differ in length");
  }
  if (train_x.cols() != test_x.cols()) throw Error(Errc::shape_mismatch, "probe feature widths differ");
  if (train_y.empty()) throw Error(Errc::invalid_params, "probe needs training samples");
  int classes = 0;
  for (int y : train_y) classes = std::max(classes, y + 1);
  for (int y : test_y) classes = std::max(classes, y + 1);
  const auto d = static_cast<std::size_t>(train_x.cols());
  const auto k = static_cast<std::size_t>(classes);

  ParameterSet params = {Parameter{"probe.weight", Tensor::zeros({d, k})}, Parameter{"probe.bias", Tensor::zeros({k})}};
  Adam optimizer(params, options.learning_rate);
  std::vector<Target> targets(train_y.begin(), train_y.end());
  using Map = Eigen::Map<Matrix>;
  auto logits_of = [&](const Matrix& x) -> Matrix {
    Map w(params[0].tensor.values.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
    Eigen::Map<Eigen::RowVectorXd> b(params[1].tensor.values.data(), static_cast<Eigen::Index>(k));
    Matrix z = x * w;
    z.rowwise() += b;
    return z;
  };
  for (std::size_t step = 0; step < options.epochs; ++step) {
    auto [loss, grad] = loss_with_gradient(logits_of(train_x), targets, TaskKind::multi_class);
    ParameterSet grads = zeros_like(params);
    Map(grads[0].tensor.values.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k)) =
        train_x.transpose() * grad;
    Eigen::Map<Eigen::RowVectorXd>(grads[1].tensor.values.data(), static_cast<Eigen::Index>(k)) =
        grad.colwise().sum();
    optimizer.step(params, grads);
  }
  auto score = [&](const Matrix& x, std::span<const int> y) {
    if (y.empty()) return 0.0;
    const Matrix z = logits_of(x);
    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      Eigen::Index best = 0;
      z.row(i).maxCoeff(&best);
      hits += static_cast<int>(best) == y[static_cast<std::size_t>(i)] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(y.size());
  };
  return ProbeResult{score(train_x, train_y), score(test_x, test_y)};
}

}  // namespace eotk::cluster
