#pragma once

// Add-k smoothed n-gram language model with exact full-vocabulary
// next-token distributions.
//
// Outcome indices: 0 is <unk>, 1..W are vocabulary words in
// (frequency desc, surface asc) order. BOS (index W + 1) only appears in
// contexts and is never predicted, so a distribution has W + 1 entries.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lingad/corpus.hpp"
#include "lingad/error.hpp"

namespace lingad {

/// A normalized next-token distribution and its descending-order permutation
/// (ties broken by ascending index).
class DistributionView {
 public:
  DistributionView() = default;

  explicit DistributionView(std::vector<double> probabilities)
      : probabilities_(std::move(probabilities)), sorted_desc_(probabilities_.size()) {
    std::iota(sorted_desc_.begin(), sorted_desc_.end(), std::size_t{0});
    std::stable_sort(sorted_desc_.begin(), sorted_desc_.end(),
                     [&](std::size_t a, std::size_t b) { return probabilities_[a] > probabilities_[b]; });
  }

  std::size_t size() const { return probabilities_.size(); }
  double operator[](std::size_t i) const { return probabilities_[i]; }
  const std::vector<double>& probabilities() const { return probabilities_; }
  const std::vector<std::size_t>& sorted_desc() const { return sorted_desc_; }

 private:
  std::vector<double> probabilities_;
  std::vector<std::size_t> sorted_desc_;
};

struct NGramOptions {
  int order = 3;
  double smoothing_k = 0.1;
  std::size_t vocab_cap = 50000;
};

class NGramModel {
 public:
  using Id = std::uint32_t;
  using Context = std::vector<Id>;

  static constexpr Id kUnk = 0;
  static constexpr std::string_view kUnkSymbol = "<unk>";
  static constexpr std::string_view kBosSymbol = "<s>";

  static NGramModel fit(const std::vector<std::string>& corpus, const NGramOptions& options = {}) {
    if (corpus.empty()) throw ArgumentError("cannot fit a language model on an empty corpus");
    if (options.order < 1) throw ArgumentError("n-gram order must be at least 1");
    if (!(options.smoothing_k > 0.0)) throw ArgumentError("smoothing k must be positive");

    std::vector<std::vector<std::string>> texts;
    texts.reserve(corpus.size());
    std::unordered_map<std::string, std::uint64_t> freq;
    for (const auto& text : corpus) {
      std::vector<std::string> surfaces;
      for (auto& t : without_linebreaks(tokenize(text))) {
        ++freq[t.surface];
        surfaces.push_back(std::move(t.surface));
      }
      texts.push_back(std::move(surfaces));
    }

    std::vector<std::pair<std::string, std::uint64_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > options.vocab_cap) ranked.resize(options.vocab_cap);

    NGramModel m;
    m.order_ = options.order;
    m.k_ = options.smoothing_k;
    m.vocab_cap_ = options.vocab_cap;
    m.words_.reserve(ranked.size());
    for (auto& [w, c] : ranked) m.words_.push_back(w);
    m.build_index();

    for (const auto& surfaces : texts) {
      Context history(static_cast<std::size_t>(m.order_ - 1), m.bos());
      for (const auto& s : surfaces) {
        const Id id = m.id_of(s);
        m.add_count(history, id, 1);
        if (!history.empty()) {
          history.erase(history.begin());
          history.push_back(id);
        }
      }
    }
    return m;
  }

  int order() const { return order_; }
  double smoothing_k() const { return k_; }
  std::size_t vocab_cap() const { return vocab_cap_; }

  /// Number of predictable outcomes (vocabulary words plus <unk>).
  std::size_t outcome_count() const { return words_.size() + 1; }

  /// Full symbol list: <unk>, the vocabulary words, <s>.
  std::vector<std::string> vocabulary() const {
    std::vector<std::string> v;
    v.reserve(words_.size() + 2);
    v.emplace_back(kUnkSymbol);
    v.insert(v.end(), words_.begin(), words_.end());
    v.emplace_back(kBosSymbol);
    return v;
  }

  const std::string& surface(Id id) const {
    static const std::string unk_symbol(kUnkSymbol);
    static const std::string bos_symbol(kBosSymbol);
    if (id == kUnk) return unk_symbol;
    if (id == bos()) return bos_symbol;
    return words_.at(id - 1);
  }

  Id bos() const { return static_cast<Id>(words_.size() + 1); }

  Id id_of(std::string_view word) const {
    const auto it = index_.find(std::string(word));
    return it == index_.end() ? kUnk : it->second;
  }

  /// Distribution of the next token after `context` (surfaces); only the last
  /// order - 1 tokens matter, and shorter contexts are padded with BOS.
  DistributionView distribution(const std::vector<std::string>& context) const {
    Context ids(static_cast<std::size_t>(order_ - 1), bos());
    const std::size_t keep = std::min(ids.size(), context.size());
    for (std::size_t i = 0; i < keep; ++i) {
      ids[ids.size() - keep + i] = id_of(context[context.size() - keep + i]);
    }
    return distribution_ids(ids);
  }

  DistributionView distribution_ids(const Context& context) const {
    const std::size_t v = outcome_count();
    const auto it = counts_.find(context);
    const double total = it == counts_.end() ? 0.0 : static_cast<double>(it->second.total);
    const double denom = total + k_ * static_cast<double>(v);
    std::vector<double> p(v, k_ / denom);
    if (it != counts_.end()) {
      for (const auto& [id, c] : it->second.next) p[id] = (static_cast<double>(c) + k_) / denom;
    }
    return DistributionView(std::move(p));
  }

  std::uint64_t count(const Context& context, Id next) const {
    const auto it = counts_.find(context);
    if (it == counts_.end()) return 0;
    const auto jt = it->second.next.find(next);
    return jt == it->second.next.end() ? 0 : jt->second;
  }

  std::size_t context_count() const { return counts_.size(); }

  /// Binary model file. Little-endian, doubles stored as raw IEEE bits, so a
  /// save/load/save cycle is byte-identical.
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(order_));
    put_u64(out, std::bit_cast<std::uint64_t>(k_));
    put_u64(out, vocab_cap_);
    put_u32(out, static_cast<std::uint32_t>(words_.size()));
    for (const auto& w : words_) {
      put_u32(out, static_cast<std::uint32_t>(w.size()));
      out.write(w.data(), static_cast<std::streamsize>(w.size()));
    }
    put_u64(out, counts_.size());
    for (const auto& [ctx, entry] : counts_) {
      for (Id id : ctx) put_u32(out, id);
      put_u32(out, static_cast<std::uint32_t>(entry.next.size()));
      for (const auto& [id, c] : entry.next) {
        put_u32(out, id);
        put_u64(out, c);
      }
    }
    if (!out) throw DataError("failed writing " + path.string());
  }

  static NGramModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
      throw DataError(path.string() + ": not a lingad n-gram model");
    }
    NGramModel m;
    m.order_ = static_cast<int>(get_u32(in));
    m.k_ = std::bit_cast<double>(get_u64(in));
    m.vocab_cap_ = get_u64(in);
    if (m.order_ < 1 || !(m.k_ > 0.0)) throw DataError(path.string() + ": corrupt header");
    const std::uint32_t nwords = get_u32(in);
    m.words_.resize(nwords);
    for (auto& w : m.words_) {
      w.resize(get_u32(in));
      in.read(w.data(), static_cast<std::streamsize>(w.size()));
    }
    m.build_index();
    const std::uint64_t ncontexts = get_u64(in);
    const Id max_id = m.bos();
    for (std::uint64_t i = 0; i < ncontexts; ++i) {
      Context ctx(static_cast<std::size_t>(m.order_ - 1));
      for (auto& id : ctx) id = get_u32(in);
      const std::uint32_t nnext = get_u32(in);
      for (std::uint32_t j = 0; j < nnext; ++j) {
        const Id id = get_u32(in);
        const std::uint64_t c = get_u64(in);
        if (id >= max_id || c == 0) throw DataError(path.string() + ": corrupt count table");
        m.add_count(ctx, id, c);
      }
    }
    if (!in) throw DataError(path.string() + ": truncated model file");
    return m;
  }

 private:
  static constexpr char kMagic[8] = {'L', 'G', 'A', 'D', 'N', 'G', 'M', '1'};

  struct Entry {
    std::uint64_t total = 0;
    std::map<Id, std::uint64_t> next;
  };

  void build_index() {
    index_.clear();
    for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], static_cast<Id>(i + 1));
  }

  void add_count(const Context& ctx, Id next, std::uint64_t c) {
    auto& e = counts_[ctx];
    e.total += c;
    e.next[next] += c;
  }

  static void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
  }
  static void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
  }
  static std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4] = {};
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  static std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8] = {};
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }

  int order_ = 1;
  double k_ = 0.1;
  std::size_t vocab_cap_ = 0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, Id> index_;
  std::map<Context, Entry> counts_;
};

struct ScoredPosition {
  Token token;
  DistributionView distribution;
  std::size_t observed = 0;  // outcome index of the token actually seen
};

/// Scores every word/number/punctuation token left to right; linebreaks are
/// skipped and contexts start from BOS padding.
inline std::vector<ScoredPosition> score_text(const NGramModel& model, std::string_view text) {
  const auto tokens = without_linebreaks(tokenize(text));
  if (tokens.empty()) throw DataError("nothing to score");
  std::vector<ScoredPosition> out;
  out.reserve(tokens.size());
  NGramModel::Context history(static_cast<std::size_t>(model.order() - 1), model.bos());
  for (const auto& t : tokens) {
    const auto id = model.id_of(t.surface);
    out.push_back({t, model.distribution_ids(history), id});
    if (!history.empty()) {
      history.erase(history.begin());
      history.push_back(id);
    }
  }
  return out;
}

}  // namespace lingad
