// lingad: batch front-end for corruption, scoring, detection and evaluation.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "lingad/lingad.hpp"

namespace fs = std::filesystem;
using namespace lingad;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json option_values(const CLI::App& app) {
  ordered_json config;
  for (const CLI::Option* opt : app.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help" || names.front() == "version") continue;
    const auto& results = opt->results();
    if (opt->count() == 0) {
      config[names.front()] = opt->get_default_str();
    } else if (opt->get_expected_max() > 1 || results.size() > 1) {
      config[names.front()] = results;
    } else {
      config[names.front()] = results.empty() ? std::string("true") : results.front();
    }
  }
  return config;
}

/// Writes <out>.manifest.json next to the main output.
void write_manifest(const fs::path& out, const CLI::App& sub) {
  ordered_json m;
  m["tool"] = "lingad";
  m["version"] = kVersion;
  m["command"] = sub.get_name();
  m["global"] = option_values(*sub.get_parent());
  m["config"] = option_values(sub);
  m["timestamp"] = utc_timestamp();
  fs::path path = out;
  path += ".manifest.json";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << m.dump(2) << '\n';
}

void write_json_file(const fs::path& path, const ordered_json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << j.dump(2, ' ', false, json::error_handler_t::replace) << '\n';
  if (!f) throw DataError("failed writing " + path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed JSON: " + e.what());
  }
}

/// Deterministic membership of a sample in the training split.
bool in_train_split(const std::string& sample_id, std::uint64_t seed, double train_frac) {
  const auto h = splitmix64(derive_seed(seed, fnv1a(sample_id)));
  return static_cast<double>(h >> 11) * 0x1.0p-53 < train_frac;
}

std::vector<std::string> side_texts(const std::vector<TextSample>& samples, const std::string& side) {
  std::vector<std::string> out;
  for (const auto& s : samples) {
    if ((side == "fixed" || side == "all") && s.text_fixed) out.push_back(*s.text_fixed);
    if ((side == "corrupted" || side == "all") && s.text_corrupted) out.push_back(*s.text_corrupted);
  }
  return out;
}

std::vector<TextPair> text_pairs(const std::vector<TextSample>& samples) {
  std::vector<TextPair> out;
  for (const auto& s : samples) {
    if (s.text_corrupted && s.text_fixed) out.push_back({*s.text_corrupted, *s.text_fixed});
  }
  return out;
}

Lexicon read_lexicon(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  Lexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] != '#') lex.insert(utf8::to_lower(line));
  }
  return lex;
}

ordered_json to_json(const PplPairDiagnostics& d) {
  ordered_json j;
  j["pairs"] = d.pairs;
  j["mean_ppl_corrupted"] = d.mean_ppl_corrupted;
  j["sd_ppl_corrupted"] = d.sd_ppl_corrupted;
  j["mean_ppl_fixed"] = d.mean_ppl_fixed;
  j["sd_ppl_fixed"] = d.sd_ppl_fixed;
  j["share_increase"] = d.share_increase;
  j["share_decrease"] = d.share_decrease;
  j["share_equal"] = d.share_equal;
  j["ks_statistic"] = d.ks_statistic;
  j["ks_p_value"] = d.ks_p_value;
  const char* rows[] = {"numtok_equal", "numtok_fixed_longer", "numtok_fixed_shorter"};
  ordered_json m;
  for (std::size_t r = 0; r < 3; ++r) {
    m[rows[r]] = {{"ppl_increase", d.by_length[r][0]}, {"ppl_decrease", d.by_length[r][1]}};
  }
  j["by_length"] = m;
  if (d.pearson_defined) {
    j["pearson_rho"] = d.pearson_rho;
    j["pearson_p_value"] = d.pearson_p_value;
  } else {
    j["pearson_rho"] = nullptr;
    j["pearson_p_value"] = nullptr;
  }
  return j;
}

/// Feature rows as a matrix, restricted to `columns` (all when empty).
Matrix feature_matrix(const std::vector<FeatureRow>& rows, const std::vector<std::size_t>& columns) {
  Matrix m;
  m.reserve(rows.size());
  for (const auto& r : rows) {
    if (columns.empty()) {
      m.push_back(r.values);
    } else {
      Vector v;
      for (std::size_t c : columns) v.push_back(r.values[c]);
      m.push_back(std::move(v));
    }
  }
  return m;
}

std::vector<std::size_t> feature_columns(const std::vector<std::string>& names) {
  std::vector<std::size_t> cols;
  for (const auto& n : names) cols.push_back(feature_index(n));
  return cols;
}

/// Vectors for outlier detection: embeddings of one layer or feature rows.
struct VectorSet {
  std::vector<std::string> ids;
  Matrix vectors;
};

VectorSet load_vectors(const std::string& embeddings, std::optional<int> layer, const std::string& features,
                       const std::vector<std::string>& feature_names_selected, std::optional<int> only_label) {
  VectorSet s;
  if (!embeddings.empty() && !features.empty()) throw ArgumentError("give either --embeddings or --features");
  if (!embeddings.empty()) {
    for (auto& r : select_layer(read_embeddings(embeddings), layer)) {
      s.ids.push_back(r.id);
      s.vectors.push_back(std::move(r.vector));
    }
  } else if (!features.empty()) {
    auto rows = read_features(features);
    if (only_label) std::erase_if(rows, [&](const FeatureRow& r) { return r.label != *only_label; });
    s.vectors = feature_matrix(rows, feature_columns(feature_names_selected));
    for (const auto& r : rows) s.ids.push_back(r.id);
  } else {
    throw ArgumentError("one of --embeddings or --features is required");
  }
  if (s.vectors.empty()) throw DataError("no vectors selected");
  return s;
}

// ---------------------------------------------------------------------------

void add_corrupt(CLI::App& app, const Globals& g) {
  auto* sub = app.add_subcommand("corrupt", "Generate corrupted/correct text pairs");
  struct Opts {
    std::string in;
    std::string out;
    std::string resources;
    std::size_t n = 0;
    std::vector<std::string> weights;
    int max_edits = 1;
    bool deletions_only = false;
    bool reshape_prose = false;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--in", o->in, "Correct texts (samples.jsonl, text_fixed)")->required();
  sub->add_option("--out", o->out, "Output pairs.jsonl")->required();
  sub->add_option("--resources", o->resources, "Directory with morphology.tsv, confusions.tsv, prepositions.txt")
      ->required();
  sub->add_option("--n", o->n, "Number of pairs (default: one per input text)");
  sub->add_option("--weight", o->weights, "Rule weight as rule=value (repeatable)");
  sub->add_option("--max-edits", o->max_edits, "Maximum rule applications per text")->capture_default_str();
  sub->add_flag("--deletions-only", o->deletions_only, "Only delete prepositions and commas");
  sub->add_flag("--reshape-prose", o->reshape_prose, "Reformat prose-domain texts as verse lines first");
  sub->callback([sub, o, &g] {
    CorruptionConfig config;
    config.seed = g.seed;
    config.max_edits_per_text = o->max_edits;
    config.deletions_only = o->deletions_only;
    for (const auto& w : o->weights) {
      const auto eq = w.find('=');
      if (eq == std::string::npos) throw ArgumentError("--weight expects rule=value, got '" + w + "'");
      try {
        config.rule_weights[w.substr(0, eq)] = std::stod(w.substr(eq + 1));
      } catch (const std::logic_error&) {
        throw ArgumentError("bad weight value in '" + w + "'");
      }
    }
    config.validate();
    const auto res = CorruptionResources::load_dir(o->resources);
    std::vector<SourceText> sources;
    for (const auto& s : read_samples(o->in)) {
      if (!s.text_fixed) continue;
      if (o->reshape_prose && s.domain == "prose") {
        Rng rng(derive_seed(g.seed, fnv1a(s.id)));
        sources.push_back({s.id, "quasipoetry", quasipoetry_reshape(*s.text_fixed, rng)});
      } else {
        sources.push_back({s.id, s.domain, *s.text_fixed});
      }
    }
    if (sources.empty()) throw DataError(o->in + ": no records with text_fixed");
    const std::size_t n = o->n == 0 ? sources.size() : o->n;
    const auto records = generate_dataset(sources, config, res, n, g.jobs);
    JsonlWriter out(o->out);
    for (const auto& r : records) out.write(lingad::to_json(r));
    out.close();
    write_manifest(o->out, *sub);
    std::cerr << "corrupt: wrote " << records.size() << " pairs to " << o->out << '\n';
  });
}

void add_fit_lm(CLI::App& app, const Globals&) {
  auto* sub = app.add_subcommand("fit-lm", "Fit the add-k n-gram language model");
  struct Opts {
    std::string in;
    std::string out;
    int order = 3;
    double k = 0.1;
    std::size_t vocab_cap = 50000;
    std::string side = "fixed";
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--in", o->in, "Training samples.jsonl")->required();
  sub->add_option("--out", o->out, "Model file")->required();
  sub->add_option("--order", o->order, "n-gram order")->capture_default_str();
  sub->add_option("--k", o->k, "Add-k smoothing constant")->capture_default_str();
  sub->add_option("--vocab-cap", o->vocab_cap, "Vocabulary size cap")->capture_default_str();
  sub->add_option("--side", o->side, "Which texts to train on")
      ->check(CLI::IsMember({"fixed", "corrupted", "all"}))
      ->capture_default_str();
  sub->callback([sub, o] {
    const auto texts = side_texts(read_samples(o->in), o->side);
    if (texts.empty()) throw DataError(o->in + ": no texts on side '" + o->side + "'");
    const auto model = NGramModel::fit(texts, {o->order, o->k, o->vocab_cap});
    model.save(o->out);
    write_manifest(o->out, *sub);
    std::cerr << "fit-lm: " << texts.size() << " texts, " << model.outcome_count() << " outcomes\n";
  });
}

void add_score(CLI::App& app, const Globals& g) {
  auto* sub = app.add_subcommand("score", "Score texts with a fitted n-gram model");
  struct Opts {
    std::string model;
    std::string in;
    std::string out;
    std::size_t topk = 64;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--model", o->model, "Model file from fit-lm")->required();
  sub->add_option("--in", o->in, "samples.jsonl")->required();
  sub->add_option("--out", o->out, "Output token_scores.jsonl")->required();
  sub->add_option("--topk", o->topk, "Top-k list length per position")->capture_default_str();
  sub->callback([sub, o, &g] {
    const auto model = NGramModel::load(o->model);
    const auto instances = expand_pairs(read_samples(o->in));
    std::vector<std::optional<TokenScoreFileRecord>> records(instances.size());
    parallel_for(instances.size(), g.jobs, [&](std::size_t i) {
      if (without_linebreaks(tokenize(instances[i].text)).empty()) return;
      records[i] = make_token_score_record(instances[i].id, score_text(model, instances[i].text), o->topk);
    });
    JsonlWriter out(o->out);
    std::size_t written = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!records[i]) {
        warn("instance '" + instances[i].id + "' has no tokens and is skipped");
        continue;
      }
      out.write(lingad::to_json(*records[i]));
      ++written;
    }
    out.close();
    write_manifest(o->out, *sub);
    std::cerr << "score: " << written << " texts scored\n";
  });
}

void add_features(CLI::App& app, const Globals& g) {
  auto* sub = app.add_subcommand("features", "Aggregate token scores into text features");
  struct Opts {
    std::string scores;
    std::string samples;
    std::string out;
    std::string diagnostics;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--scores", o->scores, "token_scores.jsonl")->required();
  sub->add_option("--samples", o->samples, "samples.jsonl giving domains and labels")->required();
  sub->add_option("--out", o->out, "Output features.jsonl")->required();
  sub->add_option("--diagnostics", o->diagnostics, "Write perplexity pair diagnostics to this JSON file");
  sub->callback([sub, o, &g] {
    std::unordered_map<std::string, LabeledInstance> by_id;
    for (auto& inst : expand_pairs(read_samples(o->samples))) by_id.emplace(inst.id, std::move(inst));
    const auto scored = read_token_scores(o->scores);
    std::vector<FeatureRow> rows(scored.size());
    std::vector<TextScoreSummary> summaries(scored.size());
    for (const auto& r : scored) {
      if (!by_id.contains(r.id)) throw DataError(o->scores + ": id '" + r.id + "' not found in " + o->samples);
    }
    parallel_for(scored.size(), g.jobs, [&](std::size_t i) {
      const auto& inst = by_id.at(scored[i].id);
      const auto f = aggregate_features(token_records(scored[i]));
      rows[i] = {inst.id, inst.domain, inst.label, inst.sample_id, f.values()};
      summaries[i] = {f.perplexity, f.num_tokens};
    });
    JsonlWriter out(o->out);
    for (const auto& r : rows) out.write(lingad::to_json(r));
    out.close();

    if (!o->diagnostics.empty()) {
      std::map<std::string, std::pair<std::optional<TextScoreSummary>, std::optional<TextScoreSummary>>> sides;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& slot = sides[rows[i].sample_id];
        (rows[i].label == 1 ? slot.first : slot.second) = summaries[i];
      }
      std::vector<std::pair<TextScoreSummary, TextScoreSummary>> pairs;
      for (const auto& [id, s] : sides) {
        if (s.first && s.second) pairs.emplace_back(*s.first, *s.second);
      }
      write_json_file(o->diagnostics, to_json(ppl_pair_diagnostics(pairs)));
    }
    write_manifest(o->out, *sub);
    std::cerr << "features: " << rows.size() << " rows\n";
  });
}

void add_grid_search(CLI::App& app, const Globals& g) {
  auto* sub = app.add_subcommand("grid-search", "Pick a single-feature threshold by F0.5");
  struct Opts {
    std::string features;
    std::string feature = "ppl";
    std::string direction = "auto";
    std::size_t grid = 100;
    double train_frac = 0.5;
    std::string out;
    std::string pred;
    std::string curve;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--features", o->features, "features.jsonl")->required();
  sub->add_option("--feature", o->feature, "Feature key")->capture_default_str();
  sub->add_option("--direction", o->direction, "flag_below, flag_above or auto")
      ->check(CLI::IsMember({"flag_below", "flag_above", "auto"}))
      ->capture_default_str();
  sub->add_option("--grid", o->grid, "Number of quantile grid points")->capture_default_str();
  sub->add_option("--train-frac", o->train_frac, "Share of samples used for the search")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--out", o->out, "Detector and summary JSON")->required();
  sub->add_option("--pred", o->pred, "Held-out predictions.jsonl");
  sub->add_option("--curve", o->curve, "Threshold/F0.5 curve JSON");
  sub->callback([sub, o, &g] {
    if (!is_feature_name(o->feature)) throw ArgumentError("unknown feature '" + o->feature + "'");
    const auto rows = read_features(o->features);
    const std::size_t col = feature_index(o->feature);
    std::vector<double> train_x;
    std::vector<int> train_y;
    std::vector<const FeatureRow*> test;
    for (const auto& r : rows) {
      if (in_train_split(r.sample_id, g.seed, o->train_frac)) {
        train_x.push_back(r.values[col]);
        train_y.push_back(r.label);
      } else {
        test.push_back(&r);
      }
    }
    GridSearchResult best;
    if (o->direction == "auto") {
      auto below = grid_search_threshold(train_x, train_y, o->feature, Direction::flag_below, o->grid);
      auto above = grid_search_threshold(train_x, train_y, o->feature, Direction::flag_above, o->grid);
      best = above.f05 > below.f05 ? std::move(above) : std::move(below);
    } else {
      best = grid_search_threshold(train_x, train_y, o->feature, direction_from_name(o->direction), o->grid);
    }
    std::vector<int> test_pred;
    std::vector<int> test_y;
    for (const auto* r : test) {
      test_pred.push_back(best.detector.predict(r->values[col]));
      test_y.push_back(r->label);
    }
    ordered_json summary;
    summary["detector"] = lingad::to_json(best.detector);
    summary["train_n"] = train_x.size();
    summary["train_f05"] = best.f05;
    summary["test_n"] = test.size();
    summary["test_f05"] = test.empty() ? ordered_json(nullptr) : ordered_json(f05_score(test_pred, test_y));
    write_json_file(o->out, summary);
    if (!o->curve.empty()) {
      ordered_json c = ordered_json::array();
      for (const auto& p : best.curve) c.push_back({{"threshold", p.threshold}, {"f05", p.f05}});
      write_json_file(o->curve, c);
    }
    if (!o->pred.empty()) {
      std::vector<std::string> ids;
      std::vector<std::optional<double>> scores;
      for (const auto* r : test) {
        ids.push_back(r->id);
        scores.push_back(r->values[col]);
      }
      write_predictions(o->pred, ids, test_pred, scores);
    }
    write_manifest(o->out, *sub);
    std::cerr << "grid-search: " << o->feature << ' ' << to_string(best.detector.direction) << ' '
              << best.detector.threshold << ", train F0.5 " << best.f05 << '\n';
  });
}

struct VectorOpts {
  std::string embeddings;
  std::optional<int> layer;
  std::string features;
  std::vector<std::string> feature_keys;
  std::optional<int> only_label;
};

void add_vector_options(CLI::App* sub, VectorOpts& v) {
  sub->add_option("--embeddings", v.embeddings, "embeddings.jsonl");
  sub->add_option("--layer", v.layer, "Embedding layer (default: final-layer records)");
  sub->add_option("--features", v.features, "features.jsonl instead of embeddings");
  sub->add_option("--feature", v.feature_keys, "Feature keys to use (repeatable; default all)");
  sub->add_option("--only-label", v.only_label, "Keep only feature rows with this label")
      ->check(CLI::IsMember({0, 1}));
}

void add_fit_outlier(CLI::App& app, const Globals& g) {
  auto* sub = app.add_subcommand("fit-outlier", "Fit an outlier detector on vectors");
  struct Opts {
    VectorOpts v;
    std::string algorithm = "iforest";
    double contamination = 0.1;
    std::size_t trees = 100;
    std::size_t subsample = 256;
    std::size_t neighbors = 0;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  add_vector_options(sub, o->v);
  sub->add_option("--algorithm", o->algorithm, "kde, iforest or abod")
      ->check(CLI::IsMember({"kde", "iforest", "abod"}))
      ->capture_default_str();
  sub->add_option("--contamination", o->contamination, "Expected outlier share in (0, 0.5]")->capture_default_str();
  sub->add_option("--trees", o->trees, "Isolation forest size")->capture_default_str();
  sub->add_option("--subsample", o->subsample, "Isolation forest subsample")->capture_default_str();
  sub->add_option("--abod-neighbors", o->neighbors, "ABOD nearest references (0 = all)")->capture_default_str();
  sub->add_option("--out", o->out, "Model JSON")->required();
  sub->callback([sub, o, &g] {
    const auto data = load_vectors(o->v.embeddings, o->v.layer, o->v.features, o->v.feature_keys, o->v.only_label);
    OutlierOptions opts;
    opts.contamination = o->contamination;
    opts.n_trees = o->trees;
    opts.subsample = o->subsample;
    opts.abod_neighbors = o->neighbors;
    opts.seed = g.seed;
    opts.jobs = g.jobs;
    const auto fitted = fit_outlier(data.vectors, outlier_algorithm_from_name(o->algorithm), opts);
    auto j = lingad::to_json(fitted.model);
    if (!o->v.features.empty()) j["feature_keys"] = o->v.feature_keys;
    write_json_file(o->out, j);
    write_manifest(o->out, *sub);
    std::cerr << "fit-outlier: " << o->algorithm << " on " << data.vectors.size() << " vectors, threshold "
              << fitted.model.score_threshold << '\n';
  });
}

void add_score_outlier(CLI::App& app, const Globals& g) {
  auto* sub = app.add_subcommand("score-outlier", "Apply a fitted outlier detector");
  struct Opts {
    VectorOpts v;
    std::string model;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  add_vector_options(sub, o->v);
  sub->add_option("--model", o->model, "Model JSON from fit-outlier")->required();
  sub->add_option("--out", o->out, "Output predictions.jsonl")->required();
  sub->callback([sub, o, &g] {
    const auto j = read_json_file(o->model);
    const auto model = outlier_model_from_json(j);
    auto keys = o->v.feature_keys;
    if (keys.empty() && j.contains("feature_keys")) keys = j.at("feature_keys").get<std::vector<std::string>>();
    const auto data = load_vectors(o->v.embeddings, o->v.layer, o->v.features, keys, o->v.only_label);
    const auto scores = model.score_all(data.vectors, g.jobs);
    std::vector<int> preds;
    std::vector<std::optional<double>> opt_scores;
    for (double s : scores) {
      preds.push_back(s > model.score_threshold ? 1 : 0);
      opt_scores.push_back(s);
    }
    write_predictions(o->out, data.ids, preds, opt_scores);
    write_manifest(o->out, *sub);
  });
}

void add_gmm_gap(CLI::App& app, const Globals& g) {
  auto* sub = app.add_subcommand("gmm-gap", "Surprisal gap between corrupted and fixed embeddings per layer");
  struct Opts {
    std::string train;
    std::string pairs;
    std::size_t k = 4;
    std::size_t max_iter = 200;
    double tol = 1e-6;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--train", o->train, "embeddings.jsonl of correct texts for fitting")->required();
  sub->add_option("--pairs", o->pairs, "embeddings.jsonl with #corrupted / #fixed instance ids")->required();
  sub->add_option("--k", o->k, "Mixture components")->capture_default_str();
  sub->add_option("--max-iter", o->max_iter, "EM iteration cap")->capture_default_str();
  sub->add_option("--tol", o->tol, "EM convergence tolerance")->capture_default_str();
  sub->add_option("--out", o->out, "Report JSON")->required();
  sub->callback([sub, o, &g] {
    const auto train = read_embeddings(o->train);
    const auto pairs = read_embeddings(o->pairs);
    std::set<std::optional<int>> layers;
    for (const auto& r : pairs) layers.insert(r.layer);
    auto ends_with = [](const std::string& s, std::string_view suffix) {
      return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    ordered_json report = ordered_json::array();
    for (const auto& layer : layers) {
      Matrix fit_set;
      for (const auto& r : train) {
        if (r.layer == layer) fit_set.push_back(r.vector);
      }
      Matrix corrupted;
      Matrix fixed;
      for (const auto& r : pairs) {
        if (r.layer != layer) continue;
        if (ends_with(r.id, kCorruptedSuffix)) corrupted.push_back(r.vector);
        if (ends_with(r.id, kFixedSuffix)) fixed.push_back(r.vector);
      }
      if (fit_set.size() < o->k || corrupted.empty() || fixed.empty()) {
        warn("layer " + (layer ? std::to_string(*layer) : std::string("final")) + " skipped: not enough vectors");
        continue;
      }
      const auto model = gmm_fit(fit_set, o->k, derive_seed(g.seed, layer ? static_cast<std::uint64_t>(*layer) : 0),
                                 o->max_iter, o->tol);
      ordered_json row;
      row["layer"] = layer ? ordered_json(*layer) : ordered_json(nullptr);
      row["gap"] = surprisal_gap(model, corrupted, fixed);
      row["n_corrupted"] = corrupted.size();
      row["n_fixed"] = fixed.size();
      row["iterations"] = model.iterations;
      row["converged"] = model.converged;
      report.push_back(std::move(row));
    }
    write_json_file(o->out, report);
    write_manifest(o->out, *sub);
  });
}

void add_classify(CLI::App& app, const Globals& g) {
  auto* sub = app.add_subcommand("classify", "Logistic classifier over text features");
  struct Opts {
    std::string features;
    std::vector<std::string> keys;
    double train_frac = 0.5;
    double l2 = 1e-3;
    std::size_t epochs = 2000;
    double lr = 0.5;
    std::size_t repeats = 10;
    std::string out;
    std::string importance;
    std::string model;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--features", o->features, "features.jsonl")->required();
  sub->add_option("--feature", o->keys, "Feature keys to use (repeatable; default all)");
  sub->add_option("--train-frac", o->train_frac, "Share of samples used for fitting")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--l2", o->l2, "L2 penalty")->capture_default_str();
  sub->add_option("--epochs", o->epochs, "Gradient steps")->capture_default_str();
  sub->add_option("--lr", o->lr, "Learning rate")->capture_default_str();
  sub->add_option("--repeats", o->repeats, "Permutation importance repeats")->capture_default_str();
  sub->add_option("--out", o->out, "Held-out predictions.jsonl")->required();
  sub->add_option("--importance", o->importance, "Permutation importance JSON (held-out)");
  sub->add_option("--model", o->model, "Fitted classifier JSON");
  sub->callback([sub, o, &g] {
    const auto rows = read_features(o->features);
    auto keys = o->keys.empty() ? feature_names() : o->keys;
    const auto cols = feature_columns(keys);
    std::vector<FeatureRow> train;
    std::vector<FeatureRow> test;
    for (const auto& r : rows) (in_train_split(r.sample_id, g.seed, o->train_frac) ? train : test).push_back(r);
    std::vector<int> train_y;
    for (const auto& r : train) train_y.push_back(r.label);
    const auto clf = classifier_fit(feature_matrix(train, cols), train_y, {o->l2, o->epochs, o->lr, g.seed});
    const auto test_x = feature_matrix(test, cols);
    std::vector<std::string> ids;
    std::vector<int> preds;
    std::vector<std::optional<double>> scores;
    std::vector<int> test_y;
    for (std::size_t i = 0; i < test.size(); ++i) {
      ids.push_back(test[i].id);
      const double p = clf.predict_proba(test_x[i]);
      preds.push_back(p > 0.5 ? 1 : 0);
      scores.push_back(p);
      test_y.push_back(test[i].label);
    }
    write_predictions(o->out, ids, preds, scores);
    if (!o->model.empty()) write_json_file(o->model, lingad::to_json(clf));
    if (!o->importance.empty()) {
      if (test.empty()) throw DataError("no held-out rows for permutation importance");
      const auto imp = permutation_importance([&](const Matrix& m) { return clf.predict(m); }, test_x, test_y,
                                              o->repeats, g.seed);
      ordered_json j = ordered_json::array();
      for (std::size_t f = 0; f < keys.size(); ++f) {
        j.push_back({{"feature", keys[f]}, {"importance", imp[f].importance}, {"sd", imp[f].sd}});
      }
      write_json_file(o->importance, j);
    }
    write_manifest(o->out, *sub);
    if (!test.empty()) std::cerr << "classify: held-out F0.5 " << f05_score(preds, test_y) << '\n';
  });
}

void add_diff(CLI::App& app, const Globals&) {
  auto* sub = app.add_subcommand("diff", "Extract and categorize word-level edits");
  struct Opts {
    std::string in;
    std::string out;
    std::string lexicon;
    std::string profile;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--in", o->in, "pairs or samples.jsonl")->required();
  sub->add_option("--out", o->out, "Output edits.jsonl")->required();
  sub->add_option("--lexicon", o->lexicon, "Known-word list, one per line");
  sub->add_option("--profile", o->profile, "Edit frequency profile JSON");
  sub->callback([sub, o] {
    const auto samples = read_samples(o->in);
    Lexicon lex;
    if (!o->lexicon.empty()) lex = read_lexicon(o->lexicon);
    const Lexicon* lp = o->lexicon.empty() ? nullptr : &lex;
    JsonlWriter out(o->out);
    std::vector<TextPair> pairs;
    for (const auto& s : samples) {
      if (!s.text_corrupted || !s.text_fixed) continue;
      pairs.push_back({*s.text_corrupted, *s.text_fixed});
      ordered_json edits = ordered_json::array();
      for (const auto& e : word_level_diff(*s.text_corrupted, *s.text_fixed, lp)) {
        edits.push_back({{"kind", to_string(e.kind)},
                         {"src", e.src_tokens},
                         {"dst", e.dst_tokens},
                         {"pos", e.src_position},
                         {"category", to_string(e.category)}});
      }
      out.write(ordered_json{{"id", s.id}, {"edits", edits}});
    }
    out.close();
    if (!o->profile.empty()) {
      const auto p = edit_frequency_profile(pairs, lp);
      ordered_json j;
      j["pairs"] = pairs.size();
      j["total_edits"] = p.total_edits;
      j["category_counts"] = p.category_counts;
      ordered_json hist;
      for (const auto& [k, v] : p.edits_per_pair_histogram) hist[std::to_string(k)] = v;
      j["edits_per_pair"] = hist;
      j["signature_frequencies"] = p.signature_frequencies;
      write_json_file(o->profile, j);
    }
    write_manifest(o->out, *sub);
  });
}

void add_stats(CLI::App& app, const Globals&) {
  auto* sub = app.add_subcommand("stats", "Vocabulary, n-gram, line and edit statistics");
  struct Opts {
    std::string in;
    std::string side = "fixed";
    std::size_t max_n = 3;
    std::string reference;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--in", o->in, "samples.jsonl")->required();
  sub->add_option("--side", o->side, "Texts to count")
      ->check(CLI::IsMember({"fixed", "corrupted", "all"}))
      ->capture_default_str();
  sub->add_option("--max-n", o->max_n, "Largest n-gram order")->capture_default_str();
  sub->add_option("--reference", o->reference, "Second samples.jsonl for vocabulary overlap");
  sub->add_option("--out", o->out, "Report JSON")->required();
  sub->callback([sub, o] {
    const auto samples = read_samples(o->in);
    const auto texts = side_texts(samples, o->side);
    ordered_json j;
    j["texts"] = texts.size();
    const auto vs = vocab_stats(texts, o->max_n);
    j["total_words"] = vs.total_words;
    j["unique_words"] = vs.unique_words;
    j["unique_ngrams"] = vs.unique_ngrams;
    std::map<std::string, std::size_t> domains;
    for (const auto& s : samples) ++domains[s.domain];
    j["domains"] = domains;
    ordered_json lines;
    for (const auto& [k, v] : poem_line_stats(texts)) lines[std::to_string(k)] = v;
    j["lines_per_text"] = lines;
    const auto pairs = text_pairs(samples);
    if (!pairs.empty()) {
      ordered_json hist;
      for (const auto& [k, v] : edit_count_histogram(pairs)) hist[std::to_string(k)] = v;
      j["edits_per_pair"] = hist;
    }
    if (!o->reference.empty()) {
      const auto ov = vocab_overlap_and_novelty(texts, side_texts(read_samples(o->reference), o->side));
      j["overlap"] = {{"new_words", ov.new_words}, {"jaccard", ov.jaccard}, {"containment", ov.containment}};
    }
    write_json_file(o->out, j);
    write_manifest(o->out, *sub);
  });
}

void add_kl(CLI::App& app, const Globals&) {
  auto* sub = app.add_subcommand("kl", "KL divergence between edit frequency profiles");
  struct Opts {
    std::string p;
    std::string q;
    double epsilon = 1e-9;
    std::string lexicon;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--p", o->p, "pairs.jsonl for P")->required();
  sub->add_option("--q", o->q, "pairs.jsonl for Q")->required();
  sub->add_option("--epsilon", o->epsilon, "Additive smoothing")->capture_default_str();
  sub->add_option("--lexicon", o->lexicon, "Known-word list for categorization");
  sub->add_option("--out", o->out, "Report JSON");
  sub->callback([sub, o] {
    Lexicon lex;
    if (!o->lexicon.empty()) lex = read_lexicon(o->lexicon);
    const Lexicon* lp = o->lexicon.empty() ? nullptr : &lex;
    const auto p = edit_frequency_profile(text_pairs(read_samples(o->p)), lp);
    const auto q = edit_frequency_profile(text_pairs(read_samples(o->q)), lp);
    if (p.total_edits == 0) throw DataError(o->p + ": no edits");
    ordered_json j;
    j["kl"] = kl_divergence(p, q, o->epsilon);
    j["epsilon"] = o->epsilon;
    j["p_edits"] = p.total_edits;
    j["q_edits"] = q.total_edits;
    std::cout << j.dump() << '\n';
    if (!o->out.empty()) {
      write_json_file(o->out, j);
      write_manifest(o->out, *sub);
    }
  });
}

void add_eval(CLI::App& app, const Globals& g) {
  auto* sub = app.add_subcommand("eval", "F0.5 with confidence intervals on balanced sets");
  struct Opts {
    std::vector<std::string> pred;
    std::string samples;
    std::size_t bootstrap = 1000;
    double level = 0.95;
    double t_value = 4.303;
    std::string ci = "auto";
    bool subset = false;
    bool no_domains = false;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--pred", o->pred, "predictions.jsonl (repeat for several runs)")->required();
  sub->add_option("--samples", o->samples, "samples.jsonl with gold pairs")->required();
  sub->add_option("--bootstrap", o->bootstrap, "Bootstrap replicates")->capture_default_str();
  sub->add_option("--level", o->level, "Confidence level")->capture_default_str();
  sub->add_option("--t-value", o->t_value, "t quantile for run-based intervals")->capture_default_str();
  sub->add_option("--ci", o->ci, "bootstrap, t, none or auto (t for several runs)")
      ->check(CLI::IsMember({"bootstrap", "t", "none", "auto"}))
      ->capture_default_str();
  sub->add_flag("--subset", o->subset, "Evaluate only instances present in every predictions file");
  sub->add_flag("--no-domains", o->no_domains, "Report only the overall row");
  sub->add_option("--out", o->out, "Report JSON");
  sub->callback([sub, o, &g] {
    std::vector<Predictions> runs;
    for (const auto& p : o->pred) runs.push_back(read_predictions(p));
    auto instances = expand_pairs(read_samples(o->samples));
    if (o->subset) {
      std::erase_if(instances, [&](const LabeledInstance& inst) {
        for (const auto& r : runs) {
          if (!r.contains(inst.id)) return true;
        }
        return false;
      });
    }
    EvalOptions opts;
    opts.group_by_domain = !o->no_domains;
    opts.bootstrap_replicates = o->bootstrap;
    opts.level = o->level;
    opts.t_value = o->t_value;
    opts.seed = g.seed;
    opts.jobs = g.jobs;
    if (o->ci == "auto") {
      opts.ci = runs.size() > 1 ? CiMethod::t_interval : CiMethod::bootstrap;
    } else {
      opts.ci = o->ci == "t" ? CiMethod::t_interval : (o->ci == "none" ? CiMethod::none : CiMethod::bootstrap);
    }
    const auto reports = evaluate_predictions(runs, instances, opts);
    std::cout << format_report_table(reports);
    if (!o->out.empty()) {
      ordered_json j = ordered_json::array();
      for (const auto& r : reports) j.push_back(lingad::to_json(r));
      write_json_file(o->out, j);
      write_manifest(o->out, *sub);
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lingad: corpus-quality toolkit for grammatical error detection"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  add_corrupt(app, g);
  add_fit_lm(app, g);
  add_score(app, g);
  add_features(app, g);
  add_grid_search(app, g);
  add_fit_outlier(app, g);
  add_score_outlier(app, g);
  add_gmm_gap(app, g);
  add_classify(app, g);
  add_diff(app, g);
  add_stats(app, g);
  add_kl(app, g);
  add_eval(app, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
