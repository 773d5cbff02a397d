#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "eotk/core/error.hpp"
#include "eotk/core/random.hpp"
#include "eotk/tasks/tasks.hpp"

namespace fs = std::filesystem;

namespace eotk {

namespace {

constexpr int kTrain = 0;
constexpr int kTest = 1;

std::vector<std::size_t> canonical_order(const Dataset& dataset) {
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dataset.id(a) < dataset.id(b); });
  return order;
}

void split_multiclass(const Dataset& dataset, double fraction, std::uint64_t seed, std::vector<SplitSide>& out) {
  std::vector<std::vector<std::size_t>> members(dataset.num_classes());
  for (std::size_t i : canonical_order(dataset)) {
    members[static_cast<std::size_t>(to_class_index(dataset.raw_target(i)))].push_back(i);
  }
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& m = members[c];
    Rng rng(derive_seed(seed, "split", dataset.vocabulary().name(c)));
    const auto perm = random_permutation(m.size(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m.size())));
    for (std::size_t j = 0; j < m.size(); ++j) out[m[perm[j]]] = j < n_train ? SplitSide::train : SplitSide::test;
  }
}

// Iterative stratification: repeatedly take the label with the fewest
// unassigned samples and place each of its samples on the side that still
// wants the most of that label. Sides with no capacity left are skipped, so
// totals come out exact.
void split_multilabel(const Dataset& dataset, double fraction, std::uint64_t seed, std::vector<SplitSide>& out) {
  const std::size_t n = dataset.size();
  const std::size_t k = dataset.num_classes();
  std::vector<std::size_t> order = canonical_order(dataset);
  Rng rng(derive_seed(seed, "split"));
  const auto perm = random_permutation(n, rng);
  std::vector<std::size_t> visit(n);
  for (std::size_t j = 0; j < n; ++j) visit[j] = order[perm[j]];

  std::vector<LabelVector> labels(n);
  std::vector<std::size_t> remaining(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = dataset.label_vector(i);
    for (std::size_t c = 0; c < k; ++c) remaining[c] += labels[i][c];
  }
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::size_t capacity[2] = {n_train, n - n_train};
  std::vector<double> desired[2] = {std::vector<double>(k), std::vector<double>(k)};
  for (std::size_t c = 0; c < k; ++c) {
    desired[kTrain][c] = fraction * static_cast<double>(remaining[c]);
    desired[kTest][c] = (1.0 - fraction) * static_cast<double>(remaining[c]);
  }
  std::vector<bool> assigned(n, false);

  auto place = [&](std::size_t i, int side) {
    out[i] = side == kTrain ? SplitSide::train : SplitSide::test;
    assigned[i] = true;
    --capacity[side];
    for (std::size_t c = 0; c < k; ++c) {
      if (!labels[i][c]) continue;
      desired[side][c] -= 1.0;
      --remaining[c];
    }
  };
  auto choose = [&](std::size_t label) {
    if (capacity[kTrain] == 0) return kTest;
    if (capacity[kTest] == 0) return kTrain;
    if (desired[kTrain][label] != desired[kTest][label]) return desired[kTrain][label] > desired[kTest][label] ? kTrain : kTest;
    if (capacity[kTrain] != capacity[kTest]) return capacity[kTrain] > capacity[kTest] ? kTrain : kTest;
    return rng.bernoulli(0.5) ? kTrain : kTest;
  };

  while (true) {
    std::size_t label = k;
    for (std::size_t c = 0; c < k; ++c) {
      if (remaining[c] > 0 && (label == k || remaining[c] < remaining[label])) label = c;
    }
    if (label == k) break;
    for (std::size_t i : visit) {
      if (!assigned[i] && labels[i][label]) place(i, choose(label));
    }
  }
  for (std::size_t i : visit) {
    if (assigned[i]) continue;
    place(i, capacity[kTrain] >= capacity[kTest] && capacity[kTrain] > 0 ? kTrain : kTest);
  }
}

void copy_into(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::create_directories(to.parent_path(), ec);
  fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
  if (ec) throw Error(Errc::io_error, fmt::format("cannot copy '{}' to '{}': {}", from.string(), to.string(), ec.message()));
}

bool is_within(const fs::path& inner, const fs::path& outer) {
  std::error_code ec;
  const fs::path a = fs::weakly_canonical(inner, ec);
  const fs::path b = fs::weakly_canonical(outer, ec);
  auto [end, _] = std::mismatch(b.begin(), b.end(), a.begin(), a.end());
  return end == b.end();
}

}  // namespace

std::vector<SplitSide> stratified_split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(Errc::invalid_params, "train_fraction must lie in (0, 1)", "train_fraction");
  }
  std::vector<SplitSide> out(dataset.size(), SplitSide::test);
  if (dataset.task_kind() == TaskKind::multi_class) {
    split_multiclass(dataset, train_fraction, seed, out);
  } else {
    split_multilabel(dataset, train_fraction, seed, out);
  }

  std::vector<std::string> degenerate;
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    std::size_t on[2] = {0, 0};
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset.label_vector(i)[c]) ++on[out[i] == SplitSide::train ? kTrain : kTest];
    }
    if (on[kTrain] == 0 || on[kTest] == 0) {
      degenerate.push_back(fmt::format("{} (train {}, test {})", dataset.vocabulary().name(c), on[kTrain], on[kTest]));
    }
  }
  if (!degenerate.empty()) {
    throw Error(Errc::degenerate_split,
                fmt::format("classes left without samples on one side: {}", fmt::join(degenerate, ", ")),
                "train_fraction");
  }
  return out;
}

SplitSummary prepare_split(const ImageFileDataset& dataset, double train_fraction, std::uint64_t seed,
                           const fs::path& out_root) {
  const auto sides = stratified_split(dataset, train_fraction, seed);
  const fs::path dirs[2] = {out_root / "train", out_root / "test"};
  for (const auto& dir : dirs) {
    if (is_within(dataset.config().root, dir)) {
      throw Error(Errc::invalid_params, fmt::format("out_root '{}' would overwrite the source dataset", out_root.string()),
                  "out_root");
    }
  }
  std::error_code ec;
  for (const auto& dir : dirs) {
    fs::remove_all(dir, ec);
    fs::create_directories(dir, ec);
    if (ec) throw Error(Errc::io_error, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  }

  SplitSummary summary;
  nlohmann::json assignments = nlohmann::json::object();
  const auto& names = dataset.vocabulary().names();
  if (dataset.task_kind() == TaskKind::multi_label) {
    std::ofstream csv[2];
    for (int s : {kTrain, kTest}) {
      fs::create_directories(dirs[s] / "images", ec);
      csv[s].open(dirs[s] / "labels.csv", std::ios::binary);
      if (!csv[s]) throw Error(Errc::io_error, fmt::format("cannot write '{}'", (dirs[s] / "labels.csv").string()));
      csv[s] << "image";
      for (const auto& name : names) csv[s] << ',' << name;
      csv[s] << '\n';
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const auto& rec = dataset.record(i);
      const int s = sides[i] == SplitSide::train ? kTrain : kTest;
      copy_into(rec.path, dirs[s] / "images" / rec.path.filename());
      csv[s] << rec.label_key;
      for (auto bit : dataset.label_vector(i)) csv[s] << ',' << static_cast<int>(bit);
      csv[s] << '\n';
    }
  } else {
    for (int s : {kTrain, kTest}) {
      for (const auto& name : names) fs::create_directories(dirs[s] / name, ec);
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const auto& rec = dataset.record(i);
      const int s = sides[i] == SplitSide::train ? kTrain : kTest;
      copy_into(rec.path, dirs[s] / rec.label_key / rec.path.filename());
    }
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const bool train = sides[i] == SplitSide::train;
    assignments[dataset.id(i)] = train ? "train" : "test";
    ++(train ? summary.train : summary.test);
  }

  summary.manifest = out_root / "split_manifest.json";
  const nlohmann::json doc = {{"seed", seed}, {"train_fraction", train_fraction}, {"assignments", assignments}};
  std::ofstream out(summary.manifest, std::ios::binary);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(Errc::io_error, fmt::format("cannot write '{}'", summary.manifest.string()));
  return summary;
}

}  // namespace eotk
