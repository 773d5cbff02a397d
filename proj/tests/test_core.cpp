#include <functional>
#include <set>

#include <gtest/gtest.h>

#include "eotk/core/config.hpp"
#include "eotk/core/registry.hpp"
#include "eotk/core/run.hpp"
#include "eotk/models/model.hpp"
#include "eotk/tasks/builtins.hpp"
#include "support.hpp"

using namespace eotk;
using nlohmann::json;

namespace {

ModelFactory dummy_model() {
  return [](const json&, std::uint64_t) -> std::shared_ptr<Model> { return nullptr; };
}

json train_config(const std::string& train_root, const std::string& val_root) {
  return {
      {"task", {{"classname", "TrainAndEvaluateTask"}, {"config", {{"epochs", 1}, {"model_directory", "m"}}}}},
      {"model",
       {{"classname", "SmallCNNMultiLabel"}, {"config", {{"num_classes", 17}, {"learning_rate", 0.0001}}}}},
      {"train_dataset",
       {{"classname", "MultiLabelImageDataset"}, {"config", {{"root", train_root}, {"batch_size", 16}}}}},
      {"val_dataset",
       {{"classname", "MultiLabelImageDataset"}, {"config", {{"root", val_root}, {"batch_size", 16}}}}},
  };
}

Error validation_error(const json& doc) {
  try {
    validate_config(doc, default_registry());
  } catch (const Error& e) {
    return e;
  }
  throw std::runtime_error("configuration unexpectedly validated");
}

}  // namespace

TEST(Registry, RegisterAndResolve) {
  Registry r;
  r.register_component(ComponentKind::model, "SmallCNNMultiLabel", dummy_model());
  EXPECT_TRUE(r.contains(ComponentKind::model, "SmallCNNMultiLabel"));
  EXPECT_NO_THROW(r.resolve_as<ModelFactory>(ComponentKind::model, "SmallCNNMultiLabel"));
  EXPECT_FALSE(r.contains(ComponentKind::dataset, "SmallCNNMultiLabel"));
}

TEST(Registry, DuplicateRegistration) {
  Registry r;
  r.register_component(ComponentKind::model, "X", dummy_model());
  EXPECT_EQ(test::error_code_of([&] { r.register_component(ComponentKind::model, "X", dummy_model()); }),
            Errc::duplicate_registration);
}

TEST(Registry, FactoryKindMismatchRejected) {
  Registry r;
  EXPECT_EQ(test::error_code_of([&] { r.register_component(ComponentKind::task, "X", dummy_model()); }),
            Errc::invalid_params);
}

TEST(Registry, UnknownComponentCarriesKindAndName) {
  Registry r;
  try {
    r.resolve_component(ComponentKind::dataset, "Nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unknown_component);
    EXPECT_NE(std::string(e.what()).find("dataset"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("Nope"), std::string::npos);
  }
}

TEST(Registry, NamesAreCaseSensitive) {
  const Registry& r = default_registry();
  EXPECT_TRUE(r.contains(ComponentKind::task, "TrainAndEvaluateTask"));
  EXPECT_EQ(test::error_code_of([&] { r.resolve_component(ComponentKind::task, "trainandevaluatetask"); }),
            Errc::unknown_component);
}

TEST(Registry, BuiltinsPresent) {
  const Registry& r = default_registry();
  EXPECT_EQ(r.names(ComponentKind::task).size(), 7u);
  for (const char* t : {"TrainAndEvaluateTask", "EvaluateTask", "PredictTask", "PrepareSplitTask",
                        "ExtractFeaturesTask", "DeepClusterTask", "InspectTask"}) {
    EXPECT_TRUE(r.contains(ComponentKind::task, t)) << t;
  }
  for (const char* t : {"ResizeTransform", "NormalizeTransform", "RandomHorizontalFlipTransform",
                        "OneHotEncodeTransform"}) {
    EXPECT_TRUE(r.contains(ComponentKind::transform, t)) << t;
  }
  for (const char* m : {"SmallCNNMultiLabel", "SmallCNNMultiClass", "ReferenceMLPMultiLabel",
                        "ReferenceMLPMultiClass"}) {
    EXPECT_TRUE(r.contains(ComponentKind::model, m)) << m;
  }
  EXPECT_TRUE(r.contains(ComponentKind::dataset, "MultiLabelImageDataset"));
  EXPECT_TRUE(r.contains(ComponentKind::dataset, "MultiClassImageDataset"));
}

TEST(Registry, ResolutionIsStable) {
  const Registry& r = default_registry();
  for (auto kind : {ComponentKind::task, ComponentKind::model, ComponentKind::dataset, ComponentKind::transform}) {
    for (const auto& name : r.names(kind)) {
      EXPECT_EQ(&r.resolve_component(kind, name), &r.resolve_component(kind, name));
    }
  }
}

TEST(ComponentKind, ParseRoundTrip) {
  for (auto kind : {ComponentKind::task, ComponentKind::model, ComponentKind::dataset, ComponentKind::transform}) {
    EXPECT_EQ(parse_component_kind(to_string(kind)), kind);
  }
  EXPECT_EQ(test::error_code_of([] { parse_component_kind("metric"); }), Errc::unknown_component);
}

TEST(Config, ListingShapedModelValidatesWithDefaults) {
  const RunConfig cfg = validate_config(train_config("a", "b"), default_registry());
  ASSERT_TRUE(cfg.model.has_value());
  EXPECT_EQ(cfg.model->config["num_classes"], 17);
  EXPECT_DOUBLE_EQ(cfg.model->config["threshold"].get<double>(), 0.5);
  EXPECT_EQ(cfg.model->config["pretrained"], false);
  EXPECT_EQ(cfg.train_dataset->config["shuffle"], false);
  EXPECT_EQ(cfg.train_dataset->config["num_workers"], 0);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.task.config["run_id"], "1");
}

TEST(Config, NumClassesBelowMinimum) {
  json doc = train_config("a", "b");
  doc["model"]["config"]["num_classes"] = 1;
  const Error e = validation_error(doc);
  EXPECT_EQ(e.code(), Errc::schema_error);
  EXPECT_EQ(e.path(), "model.config.num_classes");
}

TEST(Config, ErrorsNamePaths) {
  struct Case {
    std::function<void(json&)> mutate;
    Errc code;
    std::string path;
  };
  const std::vector<Case> cases = {
      {[](json& d) { d.erase("val_dataset"); }, Errc::schema_error, "val_dataset"},
      {[](json& d) { d["model"]["config"]["learning_rate"] = 0; }, Errc::schema_error, "model.config.learning_rate"},
      {[](json& d) { d["model"]["config"]["threshold"] = 1.0; }, Errc::schema_error, "model.config.threshold"},
      {[](json& d) { d["model"]["config"]["learning_rate"] = "fast"; }, Errc::schema_error,
       "model.config.learning_rate"},
      {[](json& d) { d["train_dataset"]["config"]["batch_size"] = 0; }, Errc::schema_error,
       "train_dataset.config.batch_size"},
      {[](json& d) { d["task"]["config"]["epochs"] = 0; }, Errc::schema_error, "task.config.epochs"},
      {[](json& d) { d["model"]["config"]["lerning_rate"] = 0.1; }, Errc::schema_error,
       "model.config.lerning_rate"},
      {[](json& d) { d["model"]["classname"] = "ResNet50"; }, Errc::unknown_component, "model.classname"},
      {[](json& d) { d["extra"] = 1; }, Errc::schema_error, "extra"},
      {[](json& d) { d["seed"] = -1; }, Errc::schema_error, "seed"},
  };
  for (const auto& c : cases) {
    json doc = train_config("a", "b");
    c.mutate(doc);
    const Error e = validation_error(doc);
    EXPECT_EQ(e.code(), c.code) << c.path;
    EXPECT_EQ(e.path(), c.path);
  }
}

TEST(Config, StochasticTransformRejectedInValidation) {
  json doc = train_config("a", "b");
  doc["val_dataset"]["config"]["transforms"] = json::array({{{"name", "RandomHorizontalFlipTransform"}}});
  const Error e = validation_error(doc);
  EXPECT_EQ(e.path(), "val_dataset.config.transforms[0].name");
}

TEST(Config, TransformParamsValidated) {
  json doc = train_config("a", "b");
  doc["train_dataset"]["config"]["transforms"] =
      json::array({{{"name", "NormalizeTransform"}, {"params", {{"mean", {0.5, 0.5}}, {"std", {0.5}}}}}});
  EXPECT_EQ(validation_error(doc).path(), "train_dataset.config.transforms[0].params.std");
  doc["train_dataset"]["config"]["transforms"] = json::array({{{"name", "OneHotEncodeTransform"},
                                                               {"params", {{"num_classes", 3}}}}});
  EXPECT_EQ(validation_error(doc).path(), "train_dataset.config.transforms[0].name");
}

TEST(Config, IdempotentAndRoundTrips) {
  const RunConfig a = validate_config(train_config("a", "b"), default_registry());
  const RunConfig b = validate_config(to_json(a), default_registry());
  EXPECT_EQ(a, b);
  EXPECT_EQ(to_json(a), to_json(b));
}

TEST(Config, ParseErrorHasOffset) {
  try {
    parse_config_text("{\"task\": ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
}

TEST(Config, SlotNotUsedByTask) {
  json doc = {{"task", {{"classname", "PredictTask"},
                        {"config", {{"checkpoint", "c"}, {"image_dir", "i"}, {"output_dir", "o"}}}}},
              {"model", train_config("a", "b")["model"]}};
  EXPECT_EQ(validation_error(doc).path(), "model");
}

TEST(Seeds, DerivedSeedsAreStableAndDistinct) {
  RunConfig cfg;
  cfg.seed = 42;
  std::set<std::uint64_t> seen;
  for (auto s : {SeedStream::train_dataset, SeedStream::val_dataset, SeedStream::model, SeedStream::task}) {
    EXPECT_EQ(component_seed(cfg, s), component_seed(cfg, s));
    seen.insert(component_seed(cfg, s));
  }
  EXPECT_EQ(seen.size(), 4u);
  EXPECT_EQ(derive_seed(7, "a", 3), derive_seed(7, "a", 3));
  EXPECT_NE(derive_seed(7, "a", 3), derive_seed(7, "a", 4));
}

TEST(Instantiate, MissingRootReportsPath) {
  test::TempDir dir;
  const RunConfig cfg =
      validate_config(train_config((dir / "missing").string(), (dir / "missing").string()), default_registry());
  try {
    instantiate_run(cfg, default_registry());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dataset_root_missing);
    EXPECT_EQ(e.path(), "train_dataset.config.root");
  }
}

TEST(Instantiate, EqualConfigsGiveEqualInitialModels) {
  test::TempDir dir;
  std::vector<std::pair<std::string, LabelVector>> rows;
  for (int i = 0; i < 4; ++i) rows.push_back({"s" + std::to_string(i), {1, 0}});
  rows.push_back({"s9", {0, 1}});
  test::write_multilabel_root(dir / "d", {"a", "b"}, rows);

  std::vector<std::string> checksums;
  RunContext seen;
  Registry r;
  register_builtins(r);
  r.register_component(ComponentKind::task, "Capture",
                       TaskFactory([&](const json&, const RunContext& ctx) -> std::shared_ptr<Task> {
                         checksums.push_back(ctx.model->checksum());
                         return nullptr;
                       }),
                       {.required_slots = {Slot::model}});
  json doc = {{"task", {{"classname", "Capture"}}},
              {"model", {{"classname", "SmallCNNMultiLabel"},
                         {"config", {{"num_classes", 2}, {"learning_rate", 0.001}, {"input_height", 8},
                                     {"input_width", 8}}}}}};
  const RunConfig cfg = validate_config(doc, r);
  instantiate_run(cfg, r);
  instantiate_run(cfg, r);
  ASSERT_EQ(checksums.size(), 2u);
  EXPECT_EQ(checksums[0], checksums[1]);

  doc["seed"] = 43;
  instantiate_run(validate_config(doc, r), r);
  EXPECT_NE(checksums[0], checksums[2]);
}

TEST(Errors, PrefixedJoinsPaths) {
  const Error e(Errc::schema_error, "bad", "root");
  EXPECT_EQ(e.prefixed("train_dataset.config").path(), "train_dataset.config.root");
  EXPECT_EQ(Error(Errc::io_error, "x").prefixed("task").path(), "task");
}
