#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lingad/eval.hpp"
#include "lingad/log.hpp"
#include "test_util.hpp"

using namespace lingad;

namespace {

LabeledInstance inst(std::string id, std::string domain, int label) {
  return {id, std::move(domain), "text", label, id};
}

/// Captures warnings for the lifetime of the object.
struct WarningCapture {
  std::vector<std::string> messages;
  WarningHandler previous;
  WarningCapture() {
    previous = set_warning_handler([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningCapture() { set_warning_handler(previous); }
};

}  // namespace

TEST(FBeta, HandValues) {
  EXPECT_DOUBLE_EQ(f_beta(1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(f_beta(0.0, 0.0), 0.0);
  EXPECT_NEAR(f_beta(0.5, 1.0), 5.0 / 9.0, 1e-15);
  EXPECT_NEAR(f_beta(0.8, 0.4), 1.25 * 0.32 / (0.2 + 0.4), 1e-15);
  EXPECT_NEAR(f_beta(0.8, 0.4, 1.0), 2 * 0.32 / 1.2, 1e-15);
}

TEST(FBeta, WeighsPrecisionMore) {
  EXPECT_GT(f_beta(0.9, 0.5), f_beta(0.5, 0.9));
}

TEST(Confusion, Counts) {
  const std::vector<int> p = {1, 1, 0, 0, 1};
  const std::vector<int> l = {1, 0, 1, 0, 1};
  const auto c = confusion(p, l);
  EXPECT_EQ(c.tp, 2u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(c.tn, 1u);
  EXPECT_NEAR(c.f05(), f_beta(2.0 / 3.0, 2.0 / 3.0), 1e-15);
  EXPECT_THROW(confusion(std::vector<int>{1}, std::vector<int>{1, 0}), ArgumentError);
  EXPECT_THROW(confusion(std::vector<int>{2}, std::vector<int>{1}), ArgumentError);
}

TEST(Confusion, AllPositiveOnBalancedData) {
  for (std::size_t n : {2u, 10u, 1000u}) {
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
    const std::vector<int> preds(n, 1);
    EXPECT_NEAR(f05_score(preds, labels), 5.0 / 9.0, 1e-12);
  }
}

TEST(Undersample, BalancesEachDomain) {
  std::vector<LabeledInstance> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(inst("a" + std::to_string(i), "poetry", i < 7 ? 1 : 0));
  for (int i = 0; i < 6; ++i) xs.push_back(inst("b" + std::to_string(i), "prose", i < 2 ? 1 : 0));
  const auto b = undersample_balance(xs, 5);
  std::map<std::string, std::pair<int, int>> counts;
  std::set<std::string> ids;
  for (const auto& x : b.instances) {
    (x.label ? counts[x.domain].second : counts[x.domain].first)++;
    EXPECT_TRUE(ids.insert(x.id).second);
  }
  EXPECT_EQ(counts["poetry"], std::make_pair(3, 3));
  EXPECT_EQ(counts["prose"], std::make_pair(2, 2));
  EXPECT_TRUE(b.dropped_domains.empty());
  // Minority items are all kept.
  for (const auto* id : {"a7", "a8", "a9", "b0", "b1"}) EXPECT_TRUE(ids.contains(id)) << id;
}

TEST(Undersample, DeterministicAndSeedSensitive) {
  std::vector<LabeledInstance> xs;
  for (int i = 0; i < 40; ++i) xs.push_back(inst("x" + std::to_string(i), "d", i < 30 ? 1 : 0));
  auto ids = [](const BalancedSet<LabeledInstance>& b) {
    std::vector<std::string> v;
    for (const auto& x : b.instances) v.push_back(x.id);
    return v;
  };
  EXPECT_EQ(ids(undersample_balance(xs, 1)), ids(undersample_balance(xs, 1)));
  EXPECT_NE(ids(undersample_balance(xs, 1)), ids(undersample_balance(xs, 2)));
}

TEST(Undersample, DropsSingleClassDomainWithWarning) {
  WarningCapture warnings;
  const std::vector<LabeledInstance> xs = {inst("a", "x", 1), inst("b", "x", 0), inst("c", "y", 1)};
  const auto b = undersample_balance(xs, 0);
  EXPECT_EQ(b.instances.size(), 2u);
  EXPECT_EQ(b.dropped_domains, std::vector<std::string>{"y"});
  ASSERT_EQ(warnings.messages.size(), 1u);
  EXPECT_NE(warnings.messages[0].find("'y'"), std::string::npos);
}

TEST(Bootstrap, PerfectPredictorGivesDegenerateInterval) {
  std::vector<int> labels(50);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  const auto r = bootstrap_ci(labels, labels, f05_score, 200, 0.95, 3);
  EXPECT_EQ(r.estimate, 1.0);
  EXPECT_EQ(r.low, 1.0);
  EXPECT_EQ(r.high, 1.0);
  EXPECT_EQ(r.replicates, 200u);
}

TEST(Bootstrap, DeterministicAcrossJobs) {
  Rng rng(4);
  std::vector<int> labels(300);
  std::vector<int> preds(300);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<int>(i % 2);
    preds[i] = rng.uniform() < 0.8 ? labels[i] : 1 - labels[i];
  }
  const auto a = bootstrap_ci(preds, labels, f05_score, 500, 0.95, 9, 1);
  const auto b = bootstrap_ci(preds, labels, f05_score, 500, 0.95, 9, 4);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_LE(a.low, a.estimate);
  EXPECT_GE(a.high, a.estimate);
}

TEST(Bootstrap, CoverageNearNominal) {
  // Balanced labels; each prediction is right with probability 0.8, so the
  // population precision and recall are both 0.8 and F0.5 is 0.8.
  const double truth = 0.8;
  const std::size_t n = 400;
  const int trials = 200;
  int covered = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(77, t));
    std::vector<int> labels(n);
    std::vector<int> preds(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i % 2);
      preds[i] = rng.uniform() < 0.8 ? labels[i] : 1 - labels[i];
    }
    const auto r = bootstrap_ci(preds, labels, f05_score, 300, 0.95, derive_seed(78, t));
    covered += r.low <= truth && truth <= r.high ? 1 : 0;
  }
  const double coverage = static_cast<double>(covered) / trials;
  EXPECT_GE(coverage, 0.88);
  EXPECT_LE(coverage, 0.99);
}

TEST(Bootstrap, WidthShrinksWithSampleSize) {
  double previous = 1.0;
  for (std::size_t n : {50u, 500u, 5000u}) {
    Rng rng(n);
    std::vector<int> labels(n);
    std::vector<int> preds(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i % 2);
      preds[i] = rng.uniform() < 0.75 ? labels[i] : 1 - labels[i];
    }
    const auto r = bootstrap_ci(preds, labels, f05_score, 400, 0.95, 1);
    const double width = r.high - r.low;
    EXPECT_LT(width, previous) << n;
    previous = width;
  }
}

TEST(Bootstrap, SingleClassAndErrors) {
  const std::vector<int> ones(5, 1);
  const auto r = bootstrap_ci(ones, ones, f05_score, 20);
  EXPECT_EQ(r.replicates, 0u);
  EXPECT_EQ(r.skipped, 20u);
  EXPECT_TRUE(std::isnan(r.low));
  EXPECT_THROW(bootstrap_ci(std::vector<int>{1}, std::vector<int>{1}), ArgumentError);
  EXPECT_THROW(bootstrap_ci(std::vector<int>{1, 0}, std::vector<int>{1}), ArgumentError);
}

TEST(TInterval, HandValues) {
  const std::vector<double> v = {0.80, 0.82, 0.84};
  const auto iv = t_interval(v, 4.303);
  const double half = 4.303 * 0.02 / std::sqrt(3.0);
  EXPECT_NEAR(iv.mean, 0.82, 1e-12);
  EXPECT_NEAR(iv.low, 0.82 - half, 1e-12);
  EXPECT_NEAR(iv.high, 0.82 + half, 1e-12);
  EXPECT_THROW(t_interval(std::vector<double>{1.0}, 4.303), ArgumentError);
}

TEST(Predictions, RoundTripAndValidation) {
  testutil::TempDir dir("pred");
  write_predictions(dir / "p.jsonl", {"a", "b"}, {1, 0}, {0.5, std::nullopt});
  const auto p = read_predictions(dir / "p.jsonl");
  EXPECT_EQ(p.at("a"), 1);
  EXPECT_EQ(p.at("b"), 0);
  testutil::write_file(dir / "bad.jsonl", "{\"id\":\"a\",\"pred\":2}\n");
  EXPECT_THROW(read_predictions(dir / "bad.jsonl"), DataError);
  testutil::write_file(dir / "dup.jsonl", "{\"id\":\"a\",\"pred\":1}\n{\"id\":\"a\",\"pred\":0}\n");
  EXPECT_THROW(read_predictions(dir / "dup.jsonl"), DataError);
}

TEST(EvaluatePredictions, HandFixture) {
  // Balanced already: 3 positive, 3 negative in one domain.
  const std::vector<LabeledInstance> xs = {inst("p1", "d", 1), inst("p2", "d", 1), inst("p3", "d", 1),
                                           inst("n1", "d", 0), inst("n2", "d", 0), inst("n3", "d", 0)};
  const Predictions run = {{"p1", 1}, {"p2", 1}, {"p3", 0}, {"n1", 1}, {"n2", 0}, {"n3", 0}};
  EvalOptions o;
  o.ci = CiMethod::none;
  const auto reports = evaluate_predictions({run}, xs, o);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].domain, "d");
  EXPECT_EQ(reports[1].domain, "all");
  for (const auto& r : reports) {
    EXPECT_EQ(r.n, 6u);
    EXPECT_EQ(r.tp, 2u);
    EXPECT_EQ(r.fp, 1u);
    EXPECT_NEAR(r.precision, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(r.recall, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(r.f05, 2.0 / 3.0, 1e-15);
    EXPECT_EQ(r.ci_method, CiMethod::none);
  }
}

TEST(EvaluatePredictions, AllPositiveBaselineAfterBalancing) {
  std::vector<LabeledInstance> xs;
  Predictions run;
  for (int i = 0; i < 90; ++i) {
    xs.push_back(inst("i" + std::to_string(i), i % 3 ? "poetry" : "prose", i % 4 == 0 ? 0 : 1));
    run["i" + std::to_string(i)] = 1;
  }
  EvalOptions o;
  o.bootstrap_replicates = 100;
  for (const auto& r : evaluate_predictions({run}, xs, o)) EXPECT_NEAR(r.f05, 5.0 / 9.0, 1e-9) << r.domain;
}

TEST(EvaluatePredictions, MultipleRunsUseTInterval) {
  const std::vector<LabeledInstance> xs = {inst("a", "d", 1), inst("b", "d", 0), inst("c", "d", 1),
                                           inst("e", "d", 0)};
  const std::vector<Predictions> runs = {{{"a", 1}, {"b", 0}, {"c", 1}, {"e", 0}},
                                         {{"a", 1}, {"b", 1}, {"c", 1}, {"e", 0}},
                                         {{"a", 0}, {"b", 0}, {"c", 1}, {"e", 0}}};
  EvalOptions o;
  o.ci = CiMethod::t_interval;
  o.group_by_domain = false;
  const auto reports = evaluate_predictions(runs, xs, o);
  ASSERT_EQ(reports.size(), 1u);
  const std::vector<double> f = {1.0, f_beta(2.0 / 3.0, 1.0), f_beta(1.0, 0.5)};
  const auto iv = t_interval(f, 4.303);
  EXPECT_NEAR(reports[0].f05, iv.mean, 1e-15);
  EXPECT_NEAR(reports[0].ci_low, iv.low, 1e-15);
  EXPECT_NEAR(reports[0].ci_high, iv.high, 1e-15);
  EXPECT_EQ(reports[0].n, 12u);
  EXPECT_EQ(reports[0].ci_method, CiMethod::t_interval);
}

TEST(EvaluatePredictions, MissingIdIsNamed) {
  const std::vector<LabeledInstance> xs = {inst("a", "d", 1), inst("missing-one", "d", 0)};
  const Predictions run = {{"a", 1}};
  try {
    evaluate_predictions({run}, xs, EvalOptions{});
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("missing-one"), std::string::npos);
  }
}

TEST(EvaluatePredictions, ReportTableHasRowPerGroup) {
  const std::vector<LabeledInstance> xs = {inst("a", "x", 1), inst("b", "x", 0)};
  const Predictions run = {{"a", 1}, {"b", 0}};
  EvalOptions o;
  o.bootstrap_replicates = 50;
  const auto table = format_report_table(evaluate_predictions({run}, xs, o));
  EXPECT_NE(table.find("\nx "), std::string::npos);
  EXPECT_NE(table.find("\nall"), std::string::npos);
  EXPECT_NE(table.find("1.0000"), std::string::npos);
}
