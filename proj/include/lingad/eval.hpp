#pragma once

// Evaluation protocol: per-domain class balancing by undersampling,
// F0.5 with bootstrap or t-based confidence intervals, and report output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "lingad/corpus.hpp"
#include "lingad/error.hpp"
#include "lingad/jsonl.hpp"
#include "lingad/log.hpp"
#include "lingad/metrics.hpp"
#include "lingad/parallel.hpp"
#include "lingad/rng.hpp"
#include "lingad/stats.hpp"

namespace lingad {

template <class Instance>
struct BalancedSet {
  std::vector<Instance> instances;
  std::vector<std::string> dropped_domains;  // lacked one of the classes
};

/// Within each domain, down-samples the majority class without replacement
/// to the minority size. Output order is a seeded shuffle.
template <class Instance>
BalancedSet<Instance> undersample_balance(const std::vector<Instance>& instances, std::uint64_t seed) {
  std::map<std::string, std::pair<std::vector<const Instance*>, std::vector<const Instance*>>> by_domain;
  for (const auto& inst : instances) {
    auto& [neg, pos] = by_domain[inst.domain];
    (inst.label == 1 ? pos : neg).push_back(&inst);
  }
  BalancedSet<Instance> out;
  for (auto& [domain, classes] : by_domain) {
    auto& [neg, pos] = classes;
    if (neg.empty() || pos.empty()) {
      out.dropped_domains.push_back(domain);
      warn("domain '" + domain + "' lacks one class and is dropped from evaluation");
      continue;
    }
    auto& majority = neg.size() > pos.size() ? neg : pos;
    const std::size_t keep = std::min(neg.size(), pos.size());
    Rng rng(derive_seed(seed, fnv1a(domain)));
    rng.shuffle(majority);
    majority.resize(keep);
    // Restore input order among the kept majority items.
    std::sort(majority.begin(), majority.end());
    for (const auto* p : neg) out.instances.push_back(*p);
    for (const auto* p : pos) out.instances.push_back(*p);
  }
  Rng order(derive_seed(seed, 0x5EED0F0DULL));
  order.shuffle(out.instances);
  return out;
}

struct BootstrapResult {
  double estimate = 0.0;  // metric on the full sample
  double mean = 0.0;      // mean over replicates
  double low = 0.0;
  double high = 0.0;
  std::size_t replicates = 0;
  std::size_t skipped = 0;  // replicates whose metric stayed undefined
};

/// Percentile bootstrap. A resample containing a single label class is
/// redrawn up to 10 times and then skipped. Replicate b draws from stream
/// (seed, b), so results do not depend on `jobs`.
inline BootstrapResult bootstrap_ci(std::span<const int> preds, std::span<const int> labels,
                                    const BinaryMetric& metric = f05_score, std::size_t replicates = 1000,
                                    double level = 0.95, std::uint64_t seed = 0, unsigned jobs = 1) {
  if (preds.size() != labels.size()) throw ArgumentError("bootstrap_ci: length mismatch");
  if (preds.size() < 2) throw ArgumentError("bootstrap_ci: need at least 2 observations");
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("bootstrap_ci: level must be in (0, 1)");
  const std::size_t n = preds.size();
  std::vector<std::optional<double>> values(replicates);
  parallel_for(replicates, jobs, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::vector<int> p(n);
    std::vector<int> l(n);
    for (int attempt = 0; attempt <= 10; ++attempt) {
      bool has_pos = false;
      bool has_neg = false;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = rng.index(n);
        p[i] = preds[k];
        l[i] = labels[k];
        (l[i] == 1 ? has_pos : has_neg) = true;
      }
      if (has_pos && has_neg) {
        values[b] = metric(p, l);
        return;
      }
    }
  });
  std::vector<double> ok;
  ok.reserve(replicates);
  for (const auto& v : values) {
    if (v) ok.push_back(*v);
  }
  BootstrapResult r;
  r.estimate = metric(preds, labels);
  r.replicates = ok.size();
  r.skipped = replicates - ok.size();
  if (ok.empty()) {
    r.mean = r.low = r.high = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  std::sort(ok.begin(), ok.end());
  r.mean = stats::mean(ok);
  const double alpha = 1.0 - level;
  r.low = stats::quantile_sorted(ok, alpha / 2.0);
  r.high = stats::quantile_sorted(ok, 1.0 - alpha / 2.0);
  return r;
}

struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// mean ± t · s / sqrt(n) with the sample standard deviation s.
inline Interval t_interval(std::span<const double> values, double t_value) {
  if (values.size() < 2) throw ArgumentError("t_interval: need at least 2 values");
  const double m = stats::mean(values);
  const double half = t_value * stats::sample_sd(values) / std::sqrt(static_cast<double>(values.size()));
  return {m, m - half, m + half};
}

enum class CiMethod { none, bootstrap, t_interval };

inline const char* to_string(CiMethod m) {
  switch (m) {
    case CiMethod::none: return "none";
    case CiMethod::bootstrap: return "bootstrap";
    case CiMethod::t_interval: return "t_interval";
  }
  return "?";
}

struct EvalReport {
  std::string domain;
  std::size_t n = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f05 = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  CiMethod ci_method = CiMethod::none;
};

struct EvalOptions {
  bool group_by_domain = true;
  CiMethod ci = CiMethod::bootstrap;
  std::size_t bootstrap_replicates = 1000;
  double level = 0.95;
  double t_value = 4.303;  // two-sided 95% for 2 degrees of freedom (three runs)
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

/// Id -> predicted label.
using Predictions = std::unordered_map<std::string, int>;

inline Predictions read_predictions(const std::filesystem::path& path) {
  Predictions preds;
  for_each_jsonl(path, [&](const json& r, std::size_t) {
    const auto id = required_string(r, "id");
    const auto it = r.find("pred");
    if (it == r.end() || !it->is_number_integer()) throw DataError("field 'pred' must be 0 or 1");
    const int p = it->get<int>();
    if (p != 0 && p != 1) throw DataError("field 'pred' must be 0 or 1");
    if (!preds.emplace(id, p).second) throw DataError("duplicate prediction for '" + id + "'");
  });
  return preds;
}

inline void write_predictions(const std::filesystem::path& path, const std::vector<std::string>& ids,
                              const std::vector<int>& preds, const std::vector<std::optional<double>>& scores) {
  JsonlWriter out(path);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ordered_json j;
    j["id"] = ids[i];
    j["pred"] = preds[i];
    j["score"] = scores.size() > i && scores[i] ? ordered_json(*scores[i]) : ordered_json(nullptr);
    out.write(j);
  }
  out.close();
}

/// Evaluates one or more prediction runs over the same instances. Each domain
/// is balanced first; rows are emitted per domain (if requested) plus an
/// "all" row over the pooled balanced set. With several runs, counts are
/// pooled and precision, recall and F0.5 are run means; the t interval uses
/// the per-run F0.5 values.
inline std::vector<EvalReport> evaluate_predictions(const std::vector<Predictions>& runs,
                                                    const std::vector<LabeledInstance>& instances,
                                                    const EvalOptions& options) {
  if (runs.empty()) throw ArgumentError("evaluate_predictions: no predictions");
  for (const auto& inst : instances) {
    for (const auto& run : runs) {
      if (!run.contains(inst.id)) throw DataError("no prediction for instance '" + inst.id + "'");
    }
  }
  const auto balanced = undersample_balance(instances, options.seed);
  if (balanced.instances.empty()) throw DataError("no domain has both classes");

  std::vector<std::pair<std::string, std::vector<const LabeledInstance*>>> groups;
  if (options.group_by_domain) {
    std::map<std::string, std::vector<const LabeledInstance*>> by_domain;
    for (const auto& inst : balanced.instances) by_domain[inst.domain].push_back(&inst);
    for (auto& [d, v] : by_domain) groups.emplace_back(d, std::move(v));
  }
  std::vector<const LabeledInstance*> all;
  for (const auto& inst : balanced.instances) all.push_back(&inst);
  groups.emplace_back("all", std::move(all));

  std::vector<EvalReport> reports;
  for (const auto& [domain, members] : groups) {
    EvalReport rep;
    rep.domain = domain;
    std::vector<int> labels;
    labels.reserve(members.size());
    for (const auto* m : members) labels.push_back(m->label);
    std::vector<double> f05s;
    std::vector<int> first_preds;
    double precision_sum = 0.0;
    double recall_sum = 0.0;
    Confusion pooled;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      std::vector<int> preds;
      preds.reserve(members.size());
      for (const auto* m : members) preds.push_back(runs[r].at(m->id));
      const auto c = confusion(preds, labels);
      pooled += c;
      precision_sum += c.precision();
      recall_sum += c.recall();
      f05s.push_back(c.f05());
      if (r == 0) first_preds = std::move(preds);
    }
    const double k = static_cast<double>(runs.size());
    rep.n = pooled.n();
    rep.tp = pooled.tp;
    rep.fp = pooled.fp;
    rep.fn = pooled.fn;
    rep.tn = pooled.tn;
    rep.precision = precision_sum / k;
    rep.recall = recall_sum / k;
    rep.f05 = stats::mean(f05s);
    rep.ci_low = rep.ci_high = rep.f05;
    if (options.ci == CiMethod::t_interval && runs.size() >= 2) {
      const auto iv = t_interval(f05s, options.t_value);
      rep.ci_low = iv.low;
      rep.ci_high = iv.high;
      rep.ci_method = CiMethod::t_interval;
    } else if (options.ci == CiMethod::bootstrap && runs.size() == 1 && members.size() >= 2) {
      const auto b = bootstrap_ci(first_preds, labels, f05_score, options.bootstrap_replicates, options.level,
                                  derive_seed(options.seed, fnv1a(domain)), options.jobs);
      if (b.replicates > 0) {
        rep.ci_low = b.low;
        rep.ci_high = b.high;
        rep.ci_method = CiMethod::bootstrap;
      }
    }
    reports.push_back(rep);
  }
  return reports;
}

inline ordered_json to_json(const EvalReport& r) {
  ordered_json j;
  j["domain"] = r.domain;
  j["n"] = r.n;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["tn"] = r.tn;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f05"] = r.f05;
  j["ci_low"] = r.ci_low;
  j["ci_high"] = r.ci_high;
  j["ci_method"] = to_string(r.ci_method);
  return j;
}

inline std::string format_report_table(const std::vector<EvalReport>& reports) {
  std::size_t width = 6;
  for (const auto& r : reports) width = std::max(width, r.domain.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "domain" << std::right << std::setw(8) << "n"
     << std::setw(11) << "precision" << std::setw(9) << "recall" << std::setw(9) << "F0.5" << std::setw(22)
     << "CI" << '\n';
  os << std::fixed << std::setprecision(4);
  for (const auto& r : reports) {
    std::ostringstream ci;
    ci << std::fixed << std::setprecision(4);
    if (r.ci_method == CiMethod::none) {
      ci << "-";
    } else {
      ci << "[" << r.ci_low << ", " << r.ci_high << "]";
    }
    os << std::left << std::setw(static_cast<int>(width)) << r.domain << std::right << std::setw(8) << r.n
       << std::setw(11) << r.precision << std::setw(9) << r.recall << std::setw(9) << r.f05 << std::setw(22)
       << ci.str() << '\n';
  }
  return os.str();
}

}  // namespace lingad
