#pragma once

// Readers and writers for token_scores.jsonl, features.jsonl and
// embeddings.jsonl.

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lingad/corpus.hpp"
#include "lingad/detectors/vectors.hpp"
#include "lingad/error.hpp"
#include "lingad/jsonl.hpp"
#include "lingad/token_metrics.hpp"

namespace lingad {

// ---------------------------------------------------------------------------
// token_scores.jsonl

struct TokenScoreFileRecord {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<double> logprob;
  std::vector<std::uint64_t> rank;
  std::vector<double> entropy;
  std::vector<std::vector<double>> topk;
  std::vector<double> tail_mass;
  // Exact values written by the built-in scorer; absent in exporter files.
  std::optional<std::vector<double>> xi;
  std::optional<std::vector<double>> pi;
};

inline constexpr double kTopkMassTolerance = 1e-3;

/// Checks the per-record invariants; throws DataError naming the problem.
inline void validate(const TokenScoreFileRecord& r) {
  const std::size_t n = r.tokens.size();
  if (n == 0) throw DataError("record '" + r.id + "' has no tokens");
  if (r.logprob.size() != n || r.rank.size() != n || r.entropy.size() != n || r.topk.size() != n ||
      r.tail_mass.size() != n || (r.xi && r.xi->size() != n) || (r.pi && r.pi->size() != n)) {
    throw DataError("record '" + r.id + "' has lists of unequal length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::string where = "record '" + r.id + "' position " + std::to_string(i);
    if (r.rank[i] < 1) throw DataError(where + ": rank must be >= 1");
    if (!(r.logprob[i] <= 1e-9) || std::isnan(r.logprob[i])) throw DataError(where + ": logprob must be <= 0");
    if (!(r.entropy[i] >= -1e-9)) throw DataError(where + ": entropy must be >= 0");
    if (!(r.tail_mass[i] >= -1e-9)) throw DataError(where + ": tail_mass must be >= 0");
    double total = r.tail_mass[i];
    for (std::size_t j = 0; j < r.topk[i].size(); ++j) {
      if (!(r.topk[i][j] >= 0.0)) throw DataError(where + ": negative top-k probability");
      if (j > 0 && r.topk[i][j] > r.topk[i][j - 1]) throw DataError(where + ": top-k not sorted descending");
      total += r.topk[i][j];
    }
    if (std::fabs(total - 1.0) > kTopkMassTolerance) {
      throw DataError(where + ": top-k mass plus tail_mass is " + std::to_string(total));
    }
  }
}

inline TokenScoreFileRecord token_score_record_from_json(const json& j) {
  TokenScoreFileRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.tokens = j.at("tokens").get<std::vector<std::string>>();
    r.logprob = j.at("logprob").get<std::vector<double>>();
    r.rank = j.at("rank").get<std::vector<std::uint64_t>>();
    r.entropy = j.at("entropy").get<std::vector<double>>();
    r.topk = j.at("topk").get<std::vector<std::vector<double>>>();
    r.tail_mass = j.at("tail_mass").get<std::vector<double>>();
    if (j.contains("xi")) r.xi = j.at("xi").get<std::vector<double>>();
    if (j.contains("pi")) r.pi = j.at("pi").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed token score record: ") + e.what());
  }
  validate(r);
  return r;
}

inline ordered_json to_json(const TokenScoreFileRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["tokens"] = r.tokens;
  j["logprob"] = r.logprob;
  j["rank"] = r.rank;
  j["entropy"] = r.entropy;
  j["topk"] = r.topk;
  j["tail_mass"] = r.tail_mass;
  if (r.xi) j["xi"] = *r.xi;
  if (r.pi) j["pi"] = *r.pi;
  return j;
}

/// File record for one text scored under full distributions (exact xi and pi included).
inline TokenScoreFileRecord make_token_score_record(std::string id, const std::vector<ScoredPosition>& positions,
                                                    std::size_t topk) {
  TokenScoreFileRecord r;
  r.id = std::move(id);
  r.xi.emplace();
  r.pi.emplace();
  for (const auto& pos : positions) {
    const auto rec = score_token(pos.token.surface, pos.distribution, pos.observed);
    r.tokens.push_back(rec.token);
    r.logprob.push_back(std::log(rec.p_t));
    r.rank.push_back(rec.r_t);
    r.entropy.push_back(rec.H);
    std::vector<double> top;
    double mass = 0.0;
    const auto& order = pos.distribution.sorted_desc();
    for (std::size_t j = 0; j < std::min(topk, order.size()); ++j) {
      top.push_back(pos.distribution[order[j]]);
      mass += top.back();
    }
    r.topk.push_back(std::move(top));
    r.tail_mass.push_back(std::max(0.0, 1.0 - mass));
    r.xi->push_back(rec.xi);
    r.pi->push_back(rec.pi);
  }
  return r;
}

/// Token records from a file record. Without the exact extensions, xi comes
/// from the top-k list (a lower bound when the token is outside it) and pi
/// sums the listed head (a lower bound when eta exceeds the list).
inline std::vector<TokenScoreRecord> token_records(const TokenScoreFileRecord& r) {
  std::vector<TokenScoreRecord> out;
  out.reserve(r.tokens.size());
  for (std::size_t i = 0; i < r.tokens.size(); ++i) {
    TokenScoreRecord t;
    t.token = r.tokens[i];
    t.p_t = clamp_probability(std::exp(r.logprob[i]));
    t.r_t = r.rank[i];
    t.H = std::max(0.0, r.entropy[i]);
    t.dH = -std::log(t.p_t) - t.H;
    t.eta = possible_states(t.H);
    if (r.pi) {
      t.pi = (*r.pi)[i];
    } else {
      const std::size_t m = std::min<std::size_t>(t.eta, r.topk[i].size());
      t.pi = 0.0;
      for (std::size_t j = 0; j < m; ++j) t.pi += r.topk[i][j];
    }
    if (r.xi) {
      t.xi = (*r.xi)[i];
      t.exact_xi = true;
    } else {
      const auto odd = oddballness_from_topk(r.topk[i], r.tail_mass[i], t.p_t, t.r_t);
      t.xi = odd.xi;
      t.exact_xi = odd.exact;
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<TokenScoreFileRecord> read_token_scores(const std::filesystem::path& path) {
  std::vector<TokenScoreFileRecord> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(token_score_record_from_json(j)); });
  return out;
}

// ---------------------------------------------------------------------------
// features.jsonl

struct FeatureRow {
  std::string id;
  std::string domain;
  int label = 0;
  std::string sample_id;
  std::vector<double> values;  // in feature_names() order
};

inline ordered_json to_json(const FeatureRow& r) {
  ordered_json j;
  j["id"] = r.id;
  j["domain"] = r.domain;
  j["label"] = r.label;
  j["sample_id"] = r.sample_id;
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = r.values[i];
  return j;
}

inline FeatureRow feature_row_from_json(const json& j) {
  FeatureRow r;
  r.id = required_string(j, "id");
  r.domain = optional_string(j, "domain").value_or("default");
  const auto label = j.find("label");
  if (label == j.end() || !label->is_number_integer() || (label->get<int>() != 0 && label->get<int>() != 1)) {
    throw DataError("field 'label' must be 0 or 1");
  }
  r.label = label->get<int>();
  r.sample_id = optional_string(j, "sample_id").value_or(r.id);
  for (const auto& name : feature_names()) {
    const auto it = j.find(name);
    if (it == j.end() || !it->is_number()) throw DataError("missing numeric feature '" + name + "'");
    r.values.push_back(it->get<double>());
  }
  return r;
}

inline std::vector<FeatureRow> read_features(const std::filesystem::path& path) {
  std::vector<FeatureRow> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(feature_row_from_json(j)); });
  return out;
}

inline std::size_t feature_index(std::string_view name) {
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw ArgumentError("unknown feature '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// embeddings.jsonl

struct EmbeddingRecord {
  std::string id;
  std::optional<int> layer;  // absent = final layer
  Vector vector;
};

inline ordered_json to_json(const EmbeddingRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["layer"] = r.layer ? ordered_json(*r.layer) : ordered_json(nullptr);
  j["vector"] = r.vector;
  return j;
}

/// Reads all records; every vector in the file must share one dimension.
inline std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path) {
  std::vector<EmbeddingRecord> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) {
    EmbeddingRecord r;
    r.id = required_string(j, "id");
    const auto layer = j.find("layer");
    if (layer != j.end() && !layer->is_null()) {
      if (!layer->is_number_integer()) throw DataError("field 'layer' must be an integer or null");
      r.layer = layer->get<int>();
    }
    try {
      r.vector = j.at("vector").get<Vector>();
    } catch (const json::exception&) {
      throw DataError("field 'vector' must be an array of numbers");
    }
    if (r.vector.empty()) throw DataError("empty vector for '" + r.id + "'");
    if (!out.empty() && out.front().vector.size() != r.vector.size()) {
      throw DataError("vector dimension " + std::to_string(r.vector.size()) + " differs from " +
                      std::to_string(out.front().vector.size()));
    }
    out.push_back(std::move(r));
  });
  return out;
}

/// Records of one layer (nullopt selects the final-layer records).
inline std::vector<EmbeddingRecord> select_layer(const std::vector<EmbeddingRecord>& all, std::optional<int> layer) {
  std::vector<EmbeddingRecord> out;
  for (const auto& r : all) {
    if (r.layer == layer) out.push_back(r);
  }
  return out;
}

}  // namespace lingad
