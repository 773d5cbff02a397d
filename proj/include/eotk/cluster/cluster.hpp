#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eotk/datasets/dataset.hpp"
#include "eotk/metrics/event_log.hpp"
#include "eotk/models/model.hpp"

namespace eotk::cluster {

struct FeatureMatrix {
  std::vector<std::string> ids;
  Matrix values;  ///< N x D, dataset order
};

/// In-place L2 normalization of each row; zero rows stay zero.
void l2_normalize_rows(Matrix& m);

/// Penultimate-layer activations over `dataset` without augmentation, rows
/// L2-normalized. Throws ShapeMismatch.
FeatureMatrix extract_features(const Model& model, const Dataset& dataset);

/// CSV with header `id,f0,...,f{D-1}`; values printed with 17 significant
/// digits.
void write_features_csv(const FeatureMatrix& features, const std::filesystem::path& path);

struct ClusterAssignment {
  std::vector<int> labels;
  Matrix centroids;                    ///< k x D
  double inertia = 0.0;
  std::vector<double> inertia_history;  ///< after each Lloyd iteration
  std::size_t iterations = 0;
  bool converged = false;
};

/// k-means++ seeding, then Lloyd iterations until the assignment stops
/// changing or `max_iter` is reached. Empty clusters take the point farthest
/// from its centroid; distance ties go to the lower cluster index. When `ids`
/// is given the algorithm runs over points sorted by id, so the result does
/// not depend on input order. Throws InvalidParams, LengthMismatch.
ClusterAssignment kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iter = 100,
                         std::span<const std::string> ids = {});

/// Normalized mutual information with arithmetic-mean normalization; 0 when
/// either labeling has a single cluster. Throws LengthMismatch.
double nmi(std::span<const int> a, std::span<const int> b);

/// Dataset view that replaces targets with pseudo-labels `cluster_0..k-1`,
/// optionally over a resampled index list (repeats allowed).
class PseudoLabeledDataset final : public Dataset {
 public:
  PseudoLabeledDataset(const Dataset& base, std::vector<int> labels, std::size_t k,
                       std::vector<std::size_t> indices = {});

  std::size_t size() const override { return indices_.size(); }
  const std::string& id(std::size_t index) const override;
  const Target& raw_target(std::size_t index) const override;
  Image load_image(std::size_t index) const override;

 private:
  const Dataset& base_;
  std::vector<Target> targets_;  // per base sample
  std::vector<std::size_t> indices_;
};

/// N indices drawn so that every non-empty cluster contributes about N/k
/// samples (sampling with replacement inside each cluster).
std::vector<std::size_t> balanced_indices(std::span<const int> labels, std::size_t k, std::uint64_t seed);

struct CycleReport {
  std::size_t cycle = 0;
  double inertia = 0.0;
  std::optional<double> nmi_vs_prev;
  double mean_train_loss = 0.0;
  std::size_t kmeans_iterations = 0;
};

struct DeepClusterOptions {
  std::size_t k = 4;
  std::size_t cycles = 3;
  std::size_t epochs_per_cycle = 1;
  std::uint64_t seed = 42;
  std::size_t max_iter = 100;
  bool balanced = false;  ///< resample pseudo-labels uniformly over clusters
  metrics::EventLog* log = nullptr;
  std::string run_id = "deepcluster";
  std::ostream* progress = nullptr;
};

/// Alternates feature extraction, k-means pseudo-labelling, head
/// reinitialization to width k and multi-class training. Afterwards the head
/// is reinitialized to num_classes. With zero cycles the model is untouched.
std::vector<CycleReport> deepcluster_pretrain(Model& model, const Dataset& dataset, const DeepClusterOptions& options);

/// CSV `cycle,inertia,nmi_vs_prev,mean_train_loss`; nmi is blank for cycle 1.
void write_cycle_report_csv(const std::vector<CycleReport>& report, const std::filesystem::path& path);

struct ProbeOptions {
  std::size_t epochs = 300;  ///< full-batch steps
  double learning_rate = 0.05;
};

struct ProbeResult {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

/// Softmax regression trained with Adam on (train_x, train_y), scored on
/// both sets.
ProbeResult linear_probe(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                         std::span<const int> test_y, const ProbeOptions& options = {});

}  // namespace eotk::cluster
