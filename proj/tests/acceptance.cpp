// Acceptance suite: one PASS/FAIL/SKIP line per criterion; exit status 1 if
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "checks.hpp"
#include "eotk/cluster/cluster.hpp"
#include "eotk/datasets/figure.hpp"
#include "eotk/datasets/loader.hpp"
#include "eotk/metrics/event_log.hpp"
#include "eotk/metrics/metrics.hpp"
#include "oracles.hpp"

using namespace eotk;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Outcome { pass, fail, skip };

struct Verdict {
  Outcome outcome = Outcome::fail;
  std::string detail;
};

Verdict verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Shared working directory for the example-config pipeline used by
/// criteria 3 and 7.
struct Workspace {
  test::TempDir dir;
  std::map<std::string, TaskResult> results;
  std::map<std::string, double> seconds;
  std::vector<std::string> problems;
};

const std::vector<std::string> kExampleOrder = {
    "inspect", "split",       "train",    "evaluate",         "predict",
    "features", "deepcluster", "finetune", "split_multiclass", "train_multiclass"};

fs::path examples_dir() { return fs::path(EOTK_SOURCE_DIR) / "docs" / "examples"; }

// Criterion 1 ---------------------------------------------------------------

Verdict metric_oracle() {
  const auto start = Clock::now();
  Rng rng(20240601);
  double worst = 0.0;
  int instances = 0;
  for (; instances < 1000; ++instances) {
    const std::size_t n = 1 + rng.below(32);
    const std::size_t k = 2 + rng.below(7);
    const bool multi_class = instances % 2 == 0;
    metrics::LabelMatrix t(n, LabelVector(k, 0)), p(n, LabelVector(k, 0));
    for (std::size_t i = 0; i < n; ++i) {
      if (multi_class) {
        t[i][rng.below(k)] = 1;
        p[i][rng.below(k)] = 1;
      } else {
        for (std::size_t c = 0; c < k; ++c) {
          t[i][c] = rng.bernoulli(0.4);
          p[i][c] = rng.bernoulli(0.4);
        }
      }
    }
    const auto r = metrics::evaluate(t, p, multi_class ? TaskKind::multi_class : TaskKind::multi_label, {});
    const auto o = oracle::evaluate(t, p, !multi_class);
    auto diff = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
    diff(r.accuracy, o.accuracy);
    for (auto [x, y] : {std::pair{r.micro, o.micro}, std::pair{r.macro, o.macro}}) {
      diff(x.precision, y.precision);
      diff(x.recall, y.recall);
      diff(x.f1, y.f1);
    }
    for (std::size_t c = 0; c < k; ++c) {
      diff(r.per_class[c].precision, o.per_class[c].precision);
      diff(r.per_class[c].recall, o.per_class[c].recall);
      diff(r.per_class[c].f1, o.per_class[c].f1);
    }
    if (!multi_class) {
      double exact = 0;
      for (std::size_t i = 0; i < n; ++i) exact += t[i] == p[i];
      diff(r.to_json()["subset_accuracy"].get<double>(), exact / static_cast<double>(n));
    }
  }
  const double elapsed = seconds_since(start);
  return verdict(worst <= 1e-12 && elapsed < 10.0,
                 fmt::format("{} instances, max |diff| {:.3g} (<= 1e-12), {:.2f}s (< 10s)", instances, worst, elapsed));
}

// Criterion 2 ---------------------------------------------------------------

Verdict metric_fixtures() {
  const metrics::LabelMatrix t = {{1, 0, 1}, {0, 1, 1}};
  const metrics::LabelMatrix p = {{1, 0, 0}, {0, 1, 1}};
  const auto r = metrics::evaluate(t, p, TaskKind::multi_label, {});
  const Matrix uniform = Matrix::Zero(4, 17);
  const double ce = compute_loss(uniform, {Target{0}, Target{5}, Target{11}, Target{16}}, TaskKind::multi_class);
  const bool ok = std::abs(r.micro.f1 - 6.0 / 7.0) <= 1e-12 && std::abs(r.macro.f1 - 8.0 / 9.0) <= 1e-12 &&
                  std::abs(ce - std::log(17.0)) <= 1e-6;
  return verdict(ok, fmt::format("micro_f1 {:.12f} (6/7), macro_f1 {:.12f} (8/9), uniform CE {:.9f} (ln 17 {:.9f})",
                                 r.micro.f1, r.macro.f1, ce, std::log(17.0)));
}

// Criteria 3 and 7 (example pipeline) ---------------------------------------

void run_examples(Workspace& ws) {
  const fs::path previous = fs::current_path();
  fs::current_path(ws.dir.path());
  try {
    synthetic::ShapesOptions shapes;
    shapes.count = 1000;
    shapes.size = 64;
    shapes.seed = 0;
    synthetic::write_shapes_dataset(synthetic::generate_shapes(shapes), TaskKind::multi_label, "data/shapes");
    shapes.count = 400;
    shapes.seed = 1;
    shapes.kind = TaskKind::multi_class;
    synthetic::write_shapes_dataset(synthetic::generate_shapes(shapes), TaskKind::multi_class, "data/scenes");

    for (const auto& name : kExampleOrder) {
      const auto start = Clock::now();
      try {
        ws.results[name] = test::run_config(load_config_file(examples_dir() / (name + ".json")));
      } catch (const Error& e) {
        ws.problems.push_back(fmt::format("{}: {}", name, e.what()));
        continue;
      }
      ws.seconds[name] = seconds_since(start);
      if (!ws.results[name].ok()) {
        ws.problems.push_back(fmt::format("{}: {}", name, ws.results[name].summary["error"].dump()));
      }
    }
  } catch (const std::exception& e) {
    ws.problems.push_back(e.what());
  }
  fs::current_path(previous);
}

Verdict desk_scale_training(const Workspace& ws) {
  const auto split = ws.results.find("split");
  const auto train = ws.results.find("train");
  if (split == ws.results.end() || train == ws.results.end() || !split->second.ok() || !train->second.ok()) {
    return verdict(false, "split or training run did not complete");
  }
  const auto& summary = train->second.summary;
  const double f1 = summary["final"]["micro_f1"].get<double>();
  const std::size_t n_train = split->second.summary["train"], n_test = split->second.summary["test"];
  const double minutes = ws.seconds.at("train") / 60.0;
  const bool ok = n_train == 800 && n_test == 200 && summary["epochs"] == 20 && f1 >= 0.90 && minutes <= 10.0;
  return verdict(ok, fmt::format("split {}/{}, 20 epochs, test micro_f1 {:.4f} (>= 0.90), {:.1f} min (<= 10)",
                                 n_train, n_test, f1, minutes));
}

// Criterion 4 ---------------------------------------------------------------

Verdict gradients_and_overfit() {
  const double ml = test::max_gradient_error(TaskKind::multi_label, 3);
  const double mc = test::max_gradient_error(TaskKind::multi_class, 4);
  const auto overfit = test::overfit_eight(200);
  const bool ok = ml < 1e-3 && mc < 1e-3 && overfit.final_loss < 0.01 && overfit.final_loss < overfit.initial_loss;
  return verdict(ok, fmt::format("max rel grad error BCE {:.2e} / CE {:.2e} (< 1e-3); overfit loss {:.4f} -> {:.5f} (< 0.01)",
                                 ml, mc, overfit.initial_loss, overfit.final_loss));
}

// Criterion 5 ---------------------------------------------------------------

struct RunFingerprint {
  std::map<std::string, std::string> weights;  // checkpoint dir -> weights.bin bytes
  std::vector<std::tuple<std::string, std::uint64_t, double>> events;
  double final_metric = 0.0;
};

RunFingerprint determinism_run(const fs::path& data, const fs::path& models, std::size_t workers) {
  const json dataset = {
      {"classname", "MultiLabelImageDataset"},
      {"config",
       {{"root", data.string()},
        {"batch_size", 8},
        {"shuffle", true},
        {"num_workers", workers},
        {"transforms", json::parse(R"([{"name": "RandomHorizontalFlipTransform"}])")}}}};
  json val = dataset;
  val["config"].erase("transforms");
  const json config = {
      {"seed", 7},
      {"task", {{"classname", "TrainAndEvaluateTask"}, {"config", {{"epochs", 3}, {"model_directory", models.string()}}}}},
      {"model",
       {{"classname", "SmallCNNMultiLabel"},
        {"config", {{"num_classes", 4}, {"learning_rate", 1e-3}, {"input_height", 32}, {"input_width", 32}}}}},
      {"train_dataset", dataset},
      {"val_dataset", val}};
  const auto result = test::run_config(config);
  if (!result.ok()) throw std::runtime_error("determinism run failed: " + result.summary.dump());
  RunFingerprint fp;
  for (const auto& entry : fs::directory_iterator(models / "1")) {
    if (entry.is_directory()) fp.weights[entry.path().filename().string()] = test::read_text(entry.path() / "weights.bin");
  }
  for (const auto& r : metrics::read_event_log(models / "1" / "events.jsonl").records) {
    fp.events.emplace_back(r.tag, r.step, r.value);
  }
  fp.final_metric = result.summary["final"]["micro_f1"].get<double>();
  return fp;
}

Verdict determinism() {
  test::TempDir dir;
  synthetic::write_shapes_dataset(synthetic::generate_shapes({.count = 48, .size = 32, .seed = 5}),
                                  TaskKind::multi_label, dir / "data");
  const auto a = determinism_run(dir / "data", dir / "a", 0);
  const auto b = determinism_run(dir / "data", dir / "b", 0);
  const auto c = determinism_run(dir / "data", dir / "c", 1);
  const auto d = determinism_run(dir / "data", dir / "d", 4);
  const bool runs_equal = a.weights.size() == 4 && a.weights == b.weights && a.weights == c.weights &&
                          a.events == b.events && a.events == c.events;
  const bool four_workers = std::abs(a.final_metric - d.final_metric) <= 1e-6;

  const auto model = build_model("SmallCNNMultiLabel",
                                 {{"num_classes", 4}, {"learning_rate", 1e-3}, {"input_height", 32}, {"input_width", 32}}, 3);
  const auto samples = synthetic::generate_shapes({.count = 6, .size = 32, .seed = 9});
  std::vector<Image> images;
  std::vector<Target> targets;
  for (const auto& s : samples) {
    images.push_back(s.image);
    targets.emplace_back(s.labels);
  }
  const ImageBatch batch = ImageBatch::stack(images);
  Adam adam(model->network().parameters(), 1e-3);
  for (int i = 0; i < 3; ++i) train_step(*model, adam, batch, targets, TaskKind::multi_label);
  model->mark_prepared();
  save_model(*model, dir / "rt", "1", 3, {});
  const auto loaded = load_model(dir / "rt" / "1" / "epoch_3", default_registry());
  const bool round_trip = loaded->forward(batch) == model->forward(batch);

  DatasetConfig cfg;
  cfg.transforms = {std::make_shared<transforms::RandomHorizontalFlip>(0.5)};
  const auto ds = synthetic::shapes_dataset(synthetic::generate_shapes({.count = 37, .size = 16, .seed = 2}),
                                            TaskKind::multi_label, cfg);
  BatchOptions options;
  options.batch_size = 5;
  options.shuffle = true;
  options.seed = 11;
  options.epoch = 3;
  options.augment = true;
  std::vector<std::vector<std::vector<std::string>>> compositions;
  std::vector<std::vector<std::vector<float>>> pixels;
  for (std::size_t workers : {0u, 1u, 4u}) {
    options.num_workers = workers;
    auto& ids = compositions.emplace_back();
    auto& px = pixels.emplace_back();
    for (const auto& b : iterate_batches(*ds, options)) {
      ids.push_back(b.ids);
      px.push_back(b.images.pixels);
    }
  }
  const bool batches = compositions[0] == compositions[1] && compositions[0] == compositions[2] &&
                       pixels[0] == pixels[1] && pixels[0] == pixels[2];

  return verdict(runs_equal && four_workers && round_trip && batches,
                 fmt::format("checkpoints+events equal for workers 0/0/1: {}; 4-worker final metric diff {:.1e}; "
                             "save/load logits bitwise: {}; batches equal for workers 0/1/4: {}",
                             runs_equal, std::abs(a.final_metric - d.final_metric), round_trip, batches));
}

// Criterion 6 ---------------------------------------------------------------

struct ProbeData {
  std::shared_ptr<InMemoryDataset> train, test;
  std::vector<int> train_y, test_y;
};

double probe_accuracy(const Model& model, const ProbeData& data) {
  const auto train = cluster::extract_features(model, *data.train);
  const auto test = cluster::extract_features(model, *data.test);
  return cluster::linear_probe(train.values, data.train_y, test.values, data.test_y).test_accuracy;
}

Verdict clustering() {
  const auto blobs = test::gaussian_blobs(50, 4, 0.1, 10.0, 1);
  const auto km = cluster::kmeans(blobs.points, 4, 1, 100);
  const double blob_nmi = cluster::nmi(km.labels, blobs.labels);
  bool monotone = true;
  for (std::size_t i = 1; i < km.inertia_history.size(); ++i) {
    monotone = monotone && km.inertia_history[i] <= km.inertia_history[i - 1];
  }
  const bool kmeans_ok = blob_nmi == 1.0 && km.iterations <= 25 && monotone;

  // Pretraining sees only images; shape labels are used by the probes alone.
  const auto all = synthetic::generate_shapes({.count = 1000, .size = 64, .seed = 11, .kind = TaskKind::multi_class});
  const std::vector<synthetic::ShapeSample> train_samples(all.begin(), all.begin() + 600);
  const std::vector<synthetic::ShapeSample> test_samples(all.begin() + 600, all.end());
  ProbeData data;
  data.train = synthetic::shapes_dataset(train_samples, TaskKind::multi_class, {.batch_size = 16, .shuffle = true});
  data.test = synthetic::shapes_dataset(test_samples, TaskKind::multi_class, {.batch_size = 16});
  for (std::size_t i = 0; i < data.train->size(); ++i) data.train_y.push_back(to_class_index(data.train->raw_target(i)));
  for (std::size_t i = 0; i < data.test->size(); ++i) data.test_y.push_back(to_class_index(data.test->raw_target(i)));

  const json model_config = {{"num_classes", 4}, {"learning_rate", 1e-3}};
  const auto random_init = build_model("SmallCNNMultiClass", model_config, 1);
  const double random_acc = probe_accuracy(*random_init, data);
  const auto pretrained = build_model("SmallCNNMultiClass", model_config, 1);
  cluster::DeepClusterOptions options;
  options.k = 4;
  options.cycles = 3;
  options.epochs_per_cycle = 3;
  options.seed = 5;
  cluster::deepcluster_pretrain(*pretrained, *data.train, options);
  const double dc_acc = probe_accuracy(*pretrained, data);
  const double gain = 100.0 * (dc_acc - random_acc);

  return verdict(kmeans_ok && gain >= 10.0,
                 fmt::format("blobs NMI {:.6f} in {} iterations, inertia monotone: {}; probe accuracy random-init "
                             "{:.3f} vs DeepCluster {:.3f}, gain {:+.1f} points (>= +10)",
                             blob_nmi, km.iterations, monotone, random_acc, dc_acc, gain));
}

// Criterion 7 ---------------------------------------------------------------

struct Malformed {
  std::string label;
  std::function<void(json&)> mutate;
  Errc code;
  std::string path;
};

Verdict config_corpus(const Workspace& ws) {
  const json base = load_config_file(examples_dir() / "train.json");
  auto transforms_of = [](std::string slot, json list) {
    return [slot, list](json& d) { d[slot]["config"]["transforms"] = list; };
  };
  const std::vector<Malformed> corpus = {
      {"missing model slot", [](json& d) { d.erase("model"); }, Errc::schema_error, "model"},
      {"missing val slot", [](json& d) { d.erase("val_dataset"); }, Errc::schema_error, "val_dataset"},
      {"missing task", [](json& d) { d.erase("task"); }, Errc::schema_error, "task"},
      {"unknown task", [](json& d) { d["task"]["classname"] = "TrainTask"; }, Errc::unknown_component, "task.classname"},
      {"unknown model", [](json& d) { d["model"]["classname"] = "ResNet50MultiLabel"; }, Errc::unknown_component,
       "model.classname"},
      {"unknown dataset", [](json& d) { d["train_dataset"]["classname"] = "CsvDataset"; }, Errc::unknown_component,
       "train_dataset.classname"},
      {"lr wrong type", [](json& d) { d["model"]["config"]["learning_rate"] = "0.001"; }, Errc::schema_error,
       "model.config.learning_rate"},
      {"lr zero", [](json& d) { d["model"]["config"]["learning_rate"] = 0; }, Errc::schema_error,
       "model.config.learning_rate"},
      {"one class", [](json& d) { d["model"]["config"]["num_classes"] = 1; }, Errc::schema_error,
       "model.config.num_classes"},
      {"num_classes real", [](json& d) { d["model"]["config"]["num_classes"] = 4.5; }, Errc::schema_error,
       "model.config.num_classes"},
      {"threshold above 1", [](json& d) { d["model"]["config"]["threshold"] = 1.5; }, Errc::schema_error,
       "model.config.threshold"},
      {"missing learning_rate", [](json& d) { d["model"]["config"].erase("learning_rate"); }, Errc::schema_error,
       "model.config.learning_rate"},
      {"unknown model key", [](json& d) { d["model"]["config"]["dropout"] = 0.5; }, Errc::schema_error,
       "model.config.dropout"},
      {"batch_size zero", [](json& d) { d["train_dataset"]["config"]["batch_size"] = 0; }, Errc::schema_error,
       "train_dataset.config.batch_size"},
      {"shuffle string", [](json& d) { d["train_dataset"]["config"]["shuffle"] = "yes"; }, Errc::schema_error,
       "train_dataset.config.shuffle"},
      {"negative workers", [](json& d) { d["val_dataset"]["config"]["num_workers"] = -1; }, Errc::schema_error,
       "val_dataset.config.num_workers"},
      {"missing root", [](json& d) { d["val_dataset"]["config"].erase("root"); }, Errc::schema_error,
       "val_dataset.config.root"},
      {"epochs zero", [](json& d) { d["task"]["config"]["epochs"] = 0; }, Errc::schema_error, "task.config.epochs"},
      {"missing model_directory", [](json& d) { d["task"]["config"].erase("model_directory"); }, Errc::schema_error,
       "task.config.model_directory"},
      {"unknown task key", [](json& d) { d["task"]["config"]["patience"] = 3; }, Errc::schema_error,
       "task.config.patience"},
      {"unknown top-level key", [](json& d) { d["optimizer"] = "sgd"; }, Errc::schema_error, "optimizer"},
      {"negative seed", [](json& d) { d["seed"] = -3; }, Errc::schema_error, "seed"},
      {"unknown transform", transforms_of("train_dataset", json::parse(R"([{"name": "RandomCrop"}])")),
       Errc::unknown_component, "train_dataset.config.transforms[0].name"},
      {"flip p out of range",
       transforms_of("train_dataset", json::parse(R"([{"name": "RandomHorizontalFlipTransform", "params": {"p": 2}}])")),
       Errc::schema_error, "train_dataset.config.transforms[0].params.p"},
      {"stochastic val transform",
       transforms_of("val_dataset", json::parse(R"([{"name": "RandomHorizontalFlipTransform"}])")), Errc::schema_error,
       "val_dataset.config.transforms[0].name"},
      {"resize height zero",
       transforms_of("train_dataset", json::parse(R"([{"name": "ResizeTransform", "params": {"height": 0, "width": 8}}])")),
       Errc::schema_error, "train_dataset.config.transforms[0].params.height"},
      {"normalize length mismatch",
       transforms_of("val_dataset",
                     json::parse(R"([{"name": "NormalizeTransform", "params": {"mean": [0.5, 0.5], "std": [0.5]}}])")),
       Errc::schema_error, "val_dataset.config.transforms[0].params.std"},
  };

  std::vector<std::string> misses;
  for (const auto& c : corpus) {
    json doc = base;
    c.mutate(doc);
    try {
      validate_config(doc, default_registry());
      misses.push_back(c.label + ": accepted");
    } catch (const Error& e) {
      if (e.code() != c.code || e.path() != c.path) {
        misses.push_back(fmt::format("{}: got {} at '{}'", c.label, to_string(e.code()), e.path()));
      }
    }
  }
  try {
    parse_config_text("{\"task\": {\"classname\": ");
    misses.push_back("truncated text: accepted");
  } catch (const Error& e) {
    if (e.code() != Errc::parse_error) misses.push_back("truncated text: wrong error");
  }

  std::set<std::string> documented;
  for (const auto& entry : fs::directory_iterator(examples_dir())) {
    if (entry.path().extension() == ".json") documented.insert(entry.path().stem().string());
  }
  std::size_t validated = 0, ran = 0;
  std::vector<std::string> example_problems = ws.problems;
  for (const auto& name : documented) {
    try {
      validate_config(load_config_file(examples_dir() / (name + ".json")), default_registry());
      ++validated;
    } catch (const Error& e) {
      example_problems.push_back(fmt::format("{}: {}", name, e.what()));
    }
    const auto it = ws.results.find(name);
    if (it == ws.results.end()) {
      example_problems.push_back(name + ": not run");
    } else if (it->second.ok()) {
      ++ran;
    }
  }

  const bool ok = corpus.size() >= 20 && misses.empty() && example_problems.empty();
  std::string detail = fmt::format("{} malformed configs, {} rejected as designated; {} of {} example configs "
                                   "validated, {} ran",
                                   corpus.size() + 1, corpus.size() + 1 - misses.size(), validated, documented.size(), ran);
  if (!misses.empty()) detail += fmt::format("; mismatches: {}", fmt::join(misses, "; "));
  if (!example_problems.empty()) detail += fmt::format("; example problems: {}", fmt::join(example_problems, "; "));
  return verdict(ok, detail);
}

// Criterion 8 ---------------------------------------------------------------

Verdict uc_merced() {
  const char* root = std::getenv("EOTK_UCMERCED_ROOT");
  if (root == nullptr || !fs::exists(fs::path(root) / "labels.csv")) {
    return {Outcome::skip, "set EOTK_UCMERCED_ROOT to a multi-label root (images/ + labels.csv) to run"};
  }
  test::TempDir dir;
  const json config = {
      {"task", {{"classname", "InspectTask"}, {"config", {{"output_dir", (dir / "inspect").string()}, {"indices", {340}}}}}},
      {"train_dataset", {{"classname", "MultiLabelImageDataset"}, {"config", {{"root", root}, {"batch_size", 16}}}}}};
  const auto result = test::run_config(config);
  if (!result.ok()) return verdict(false, "InspectTask failed: " + result.summary["error"].dump());
  const auto& dist = result.summary["distribution"];
  const std::size_t pavement = dist.value("pavement", 0), airplane = dist.value("airplane", 0);
  const auto labels = result.summary["samples"][0]["labels"].get<std::vector<std::string>>();
  const std::vector<std::string> expected = {"buildings", "cars", "pavement", "trees"};
  return verdict(pavement == 987 && airplane == 78 && labels == expected,
                 fmt::format("pavement {} (987), airplane {} (78), sample 340 labels [{}]", pavement, airplane,
                             fmt::join(labels, ", ")));
}

}  // namespace

int main() {
  Workspace ws;
  std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, metric_oracle},
      {2, metric_fixtures},
      {3, [&] { return desk_scale_training(ws); }},
      {4, gradients_and_overfit},
      {5, determinism},
      {6, clustering},
      {7, [&] { return config_corpus(ws); }},
      {8, uc_merced},
  };
  run_examples(ws);

  int failures = 0;
  for (const auto& [id, check] : criteria) {
    const auto start = Clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {Outcome::fail, fmt::format("exception: {}", e.what())};
    }
    const char* word = v.outcome == Outcome::pass ? "PASS" : v.outcome == Outcome::fail ? "FAIL" : "SKIP";
    failures += v.outcome == Outcome::fail;
    fmt::print("criterion {} {}  {} [{:.1f}s]\n", id, word, v.detail, seconds_since(start));
    std::fflush(stdout);
  }
  fmt::print("{} of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
