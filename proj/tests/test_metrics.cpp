#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "eotk/core/random.hpp"
#include "eotk/metrics/event_log.hpp"
#include "eotk/metrics/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace eotk;
using namespace eotk::metrics;

namespace {

const LabelMatrix kTrue = {{1, 0, 1}, {0, 1, 1}};
const LabelMatrix kPred = {{1, 0, 0}, {0, 1, 1}};

LabelMatrix random_matrix(Rng& rng, std::size_t n, std::size_t k, bool one_hot) {
  LabelMatrix m(n, LabelVector(k, 0));
  for (auto& row : m) {
    if (one_hot) {
      row[rng.below(k)] = 1;
    } else {
      for (auto& b : row) b = rng.bernoulli(0.4) ? 1 : 0;
    }
  }
  return m;
}

}  // namespace

TEST(Confusion, FixtureTotals) {
  const ClassCounts pooled = confusion_counts(kTrue, kPred).pooled();
  EXPECT_EQ(pooled.tp, 3u);
  EXPECT_EQ(pooled.fp, 0u);
  EXPECT_EQ(pooled.fn, 1u);
  EXPECT_EQ(pooled.tn, 2u);
}

TEST(Confusion, IdentityHasNoErrors) {
  for (const auto& c : confusion_counts(kTrue, kTrue).classes) {
    EXPECT_EQ(c.fp, 0u);
    EXPECT_EQ(c.fn, 0u);
  }
}

TEST(Confusion, AllZeroPredictions) {
  const LabelMatrix zeros(2, LabelVector(3, 0));
  const auto counts = confusion_counts(kTrue, zeros);
  const std::size_t positives[] = {1, 1, 2};
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(counts.classes[c].tp, 0u);
    EXPECT_EQ(counts.classes[c].fp, 0u);
    EXPECT_EQ(counts.classes[c].fn, positives[c]);
  }
}

TEST(Confusion, Errors) {
  EXPECT_EQ(test::error_code_of([] { confusion_counts(kTrue, LabelMatrix{{1, 0, 1}}); }), Errc::shape_mismatch);
  EXPECT_EQ(test::error_code_of([] { confusion_counts(kTrue, LabelMatrix{{1, 0, 2}, {0, 1, 1}}); }),
            Errc::non_binary_input);
}

TEST(Scores, FixtureMicroAndMacroF1) {
  const auto counts = confusion_counts(kTrue, kPred);
  EXPECT_NEAR(precision_recall_f1(counts, Averaging::micro)[0].f1, 6.0 / 7.0, 1e-12);
  EXPECT_NEAR(precision_recall_f1(counts, Averaging::macro)[0].f1, 8.0 / 9.0, 1e-12);
  const auto per = precision_recall_f1(counts, Averaging::per_class);
  EXPECT_DOUBLE_EQ(per[0].f1, 1.0);
  EXPECT_DOUBLE_EQ(per[1].f1, 1.0);
  EXPECT_NEAR(per[2].f1, 2.0 / 3.0, 1e-12);
}

TEST(Scores, ZeroOverZeroIsZero) {
  const Scores s = scores_from(ClassCounts{0, 0, 0, 5});
  EXPECT_EQ(s.precision, 0.0);
  EXPECT_EQ(s.recall, 0.0);
  EXPECT_EQ(s.f1, 0.0);
}

TEST(Accuracy, Fixtures) {
  const std::vector<int> t = {0, 1, 2, 1};
  const std::vector<int> p = {0, 2, 2, 1};
  EXPECT_DOUBLE_EQ(accuracy(t, p), 0.75);
  const LabelMatrix a = {{1, 0}, {0, 1}, {1, 1}, {0, 0}};
  LabelMatrix b = a;
  b[2][1] = 0;
  EXPECT_DOUBLE_EQ(accuracy(a, b, TaskKind::multi_label), 0.75);
  EXPECT_DOUBLE_EQ(accuracy(a, a, TaskKind::multi_label), 1.0);
}

TEST(Decide, InclusiveThresholdAndMonotone) {
  const std::vector<double> probs = {0.7, 0.5, 0.49};
  EXPECT_EQ(decide(probs, 0.5), (LabelVector{1, 1, 0}));
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(6);
    for (auto& v : p) v = rng.uniform();
    const double t1 = rng.uniform(0.01, 0.99);
    const double t2 = rng.uniform(t1, 0.999);
    const auto lo = decide(p, t1);
    const auto hi = decide(p, t2);
    for (std::size_t c = 0; c < p.size(); ++c) EXPECT_LE(hi[c], lo[c]);
  }
}

TEST(Metrics, OracleEquivalenceProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(32);
    const std::size_t k = 2 + rng.below(7);
    const bool multi_class = trial % 2 == 0;
    const auto t = random_matrix(rng, n, k, multi_class);
    const auto p = random_matrix(rng, n, k, multi_class);
    const auto r = evaluate(t, p, multi_class ? TaskKind::multi_class : TaskKind::multi_label, {});
    const auto o = oracle::evaluate(t, p, !multi_class);
    EXPECT_LE(std::abs(r.accuracy - o.accuracy), 1e-12);
    EXPECT_LE(std::abs(r.micro.f1 - o.micro.f1), 1e-12);
    EXPECT_LE(std::abs(r.macro.f1 - o.macro.f1), 1e-12);
    for (std::size_t c = 0; c < k; ++c) {
      EXPECT_LE(std::abs(r.per_class[c].precision - o.per_class[c].precision), 1e-12);
      EXPECT_LE(std::abs(r.per_class[c].recall - o.per_class[c].recall), 1e-12);
    }
  }
}

TEST(Metrics, OneHotMicroEqualsAccuracy) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = random_matrix(rng, 20, 5, true);
    const auto p = random_matrix(rng, 20, 5, true);
    const auto r = evaluate(t, p, TaskKind::multi_class, {});
    EXPECT_NEAR(r.micro.precision, r.accuracy, 1e-12);
    EXPECT_NEAR(r.micro.recall, r.accuracy, 1e-12);
    EXPECT_NEAR(r.micro.f1, r.accuracy, 1e-12);
  }
}

TEST(Metrics, PermutationInvariance) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    auto t = random_matrix(rng, 16, 4, false);
    auto p = random_matrix(rng, 16, 4, false);
    const auto base = evaluate(t, p, TaskKind::multi_label, {});

    const auto rows = random_permutation(t.size(), rng);
    LabelMatrix t2, p2;
    for (auto i : rows) {
      t2.push_back(t[i]);
      p2.push_back(p[i]);
    }
    const auto shuffled = evaluate(t2, p2, TaskKind::multi_label, {});
    EXPECT_EQ(base.micro.f1, shuffled.micro.f1);
    EXPECT_EQ(base.accuracy, shuffled.accuracy);

    const auto cols = random_permutation(4, rng);
    LabelMatrix t3 = t, p3 = p;
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t c = 0; c < 4; ++c) {
        t3[i][c] = t[i][cols[c]];
        p3[i][c] = p[i][cols[c]];
      }
    }
    const auto permuted = evaluate(t3, p3, TaskKind::multi_label, {});
    EXPECT_NEAR(base.micro.f1, permuted.micro.f1, 1e-12);
    EXPECT_NEAR(base.macro.f1, permuted.macro.f1, 1e-12);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(permuted.per_class[c].f1, base.per_class[cols[c]].f1);
  }
}

TEST(Metrics, ReportJsonKeys) {
  const auto r = evaluate(kTrue, kPred, TaskKind::multi_label, {"a", "b", "c"});
  const auto j = r.to_json();
  EXPECT_TRUE(j.contains("subset_accuracy"));
  EXPECT_TRUE(j.contains("micro_f1"));
  EXPECT_TRUE(j.contains("macro_f1"));
  EXPECT_NEAR(j["per_class"]["c"]["f1"].get<double>(), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(r.primary_name(), "micro_f1");
}

TEST(EventLog, RoundTrip) {
  test::TempDir dir;
  const auto path = dir / "events.jsonl";
  {
    EventLog log(path);
    log.log_scalar("1", 1, 1, "train/loss", 0.25);
    log.log_scalar("1", 2, 1, "train/loss", 0.125);
    log.log_scalar("1", 1, 1, "val/micro_f1", 0.5);
  }
  const auto contents = read_event_log(path);
  ASSERT_EQ(contents.records.size(), 3u);
  EXPECT_TRUE(contents.errors.empty());
  EXPECT_EQ(contents.records[0].run_id, "1");
  EXPECT_EQ(contents.records[0].tag, "train/loss");
  EXPECT_EQ(contents.records[0].value, 0.25);
  EXPECT_EQ(contents.records[1].step, 2u);
  EXPECT_EQ(contents.records[2].tag, "val/micro_f1");
  EXPECT_FALSE(contents.records[0].time.empty());
  EXPECT_EQ(contents.records[0].time.back(), 'Z');
}

TEST(EventLog, ExactKeys) {
  test::TempDir dir;
  EventLog log(dir / "e.jsonl");
  log.log_scalar("r", 1, 1, "t", 1.0);
  log.flush();
  const auto line = test::read_text(dir / "e.jsonl");
  const auto doc = nlohmann::json::parse(line);
  std::vector<std::string> keys;
  for (const auto& [k, v] : doc.items()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  EXPECT_EQ(keys, (std::vector<std::string>{"epoch", "run_id", "step", "tag", "time", "value"}));
}

TEST(EventLog, Rejections) {
  test::TempDir dir;
  EventLog log(dir / "e.jsonl");
  EXPECT_EQ(test::error_code_of([&] { log.log_scalar("r", 1, 1, "t", std::nan("")); }), Errc::non_finite_value);
  EXPECT_EQ(test::error_code_of(
                [&] { log.log_scalar("r", 1, 1, "t", std::numeric_limits<double>::infinity()); }),
            Errc::non_finite_value);
  log.log_scalar("r", 5, 1, "t", 1.0);
  EXPECT_EQ(test::error_code_of([&] { log.log_scalar("r", 5, 1, "t", 1.0); }), Errc::monotonicity_violation);
  EXPECT_EQ(test::error_code_of([&] { log.log_scalar("r", 4, 1, "t", 1.0); }), Errc::monotonicity_violation);
  EXPECT_NO_THROW(log.log_scalar("r", 1, 1, "other", 1.0));
  EXPECT_NO_THROW(log.log_scalar("q", 1, 1, "t", 1.0));
}

TEST(EventLog, ReopenResumesSteps) {
  test::TempDir dir;
  { EventLog(dir / "e.jsonl").log_scalar("r", 3, 1, "t", 1.0); }
  EventLog again(dir / "e.jsonl");
  EXPECT_EQ(test::error_code_of([&] { again.log_scalar("r", 3, 1, "t", 1.0); }), Errc::monotonicity_violation);
  EXPECT_NO_THROW(again.log_scalar("r", 4, 1, "t", 1.0));
}

TEST(EventLog, MalformedLinesReported) {
  test::TempDir dir;
  {
    EventLog log(dir / "e.jsonl");
    log.log_scalar("r", 1, 1, "t", 1.0);
  }
  std::ofstream(dir / "e.jsonl", std::ios::app) << "not json\n";
  { EventLog(dir / "e.jsonl").log_scalar("r", 2, 1, "t", 2.0); }
  const auto contents = read_event_log(dir / "e.jsonl");
  EXPECT_EQ(contents.records.size(), 2u);
  ASSERT_EQ(contents.errors.size(), 1u);
  EXPECT_EQ(contents.errors[0].first, 2u);
}

TEST(EventLog, FiftyEpochsGiveFiftyRecords) {
  test::TempDir dir;
  {
    EventLog log(dir / "e.jsonl");
    for (std::uint64_t e = 1; e <= 50; ++e) log.log_scalar("1", e, e, "val/micro_f1", 0.01 * static_cast<double>(e));
  }
  const auto contents = read_event_log(dir / "e.jsonl");
  ASSERT_EQ(contents.records.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(contents.records[i].step, i + 1);
}
