#include <gtest/gtest.h>

#include "lingad/corpus.hpp"
#include "test_util.hpp"

using namespace lingad;

namespace {

std::vector<std::pair<std::string, TokenKind>> kinds(std::string_view text) {
  std::vector<std::pair<std::string, TokenKind>> out;
  for (const auto& t : tokenize(text)) out.emplace_back(t.surface, t.kind);
  return out;
}

}  // namespace

TEST(Tokenize, Empty) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, WordsAndPunctuation) {
  using K = TokenKind;
  const std::vector<std::pair<std::string, TokenKind>> want = {{"кот", K::word}, {",", K::punctuation}, {"дом", K::word}};
  EXPECT_EQ(kinds("кот, дом"), want);
}

TEST(Tokenize, HyphenatedWordAndNumber) {
  using K = TokenKind;
  const std::vector<std::pair<std::string, TokenKind>> want = {
      {"two-step", K::word}, {"7", K::number}, {"!", K::punctuation}};
  EXPECT_EQ(kinds("two-step 7!"), want);
}

TEST(Tokenize, EdgeHyphensAndApostrophes) {
  using K = TokenKind;
  const std::vector<std::pair<std::string, TokenKind>> want = {
      {"-", K::punctuation}, {"abc", K::word}, {"-", K::punctuation}, {"don't", K::word}, {"'", K::punctuation}};
  EXPECT_EQ(kinds("-abc- don't'"), want);
}

TEST(Tokenize, LetterDigitBoundarySplits) {
  using K = TokenKind;
  const std::vector<std::pair<std::string, TokenKind>> want = {{"abc", K::word}, {"12", K::number}, {"d", K::word}};
  EXPECT_EQ(kinds("abc12d"), want);
}

TEST(Tokenize, Linebreaks) {
  const auto t = tokenize("а\nб\r\n");
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[1].kind, TokenKind::linebreak);
  EXPECT_EQ(t[3].kind, TokenKind::linebreak);
  EXPECT_EQ(without_linebreaks(t).size(), 2u);
}

TEST(Tokenize, SpansIncreaseAndReconstructSource) {
  const std::string text = "  Над рекою, тихо-тихо\n тает… «туман» 2024г.  ";
  const auto tokens = tokenize(text);
  std::size_t prev_end = 0;
  std::string rebuilt;
  for (const auto& t : tokens) {
    ASSERT_GE(t.start, prev_end);
    ASSERT_LT(t.start, t.end);
    const auto gap = text.substr(prev_end, t.start - prev_end);
    for (char c : gap) EXPECT_TRUE(c == ' ' || c == '\t' || c == '\r') << "non-space skipped";
    rebuilt += gap;
    EXPECT_EQ(text.substr(t.start, t.end - t.start), t.surface);
    rebuilt += t.surface;
    prev_end = t.end;
  }
  rebuilt += text.substr(prev_end);
  EXPECT_EQ(rebuilt, text);
}

TEST(Tokenize, IdempotentOnRenderedWords) {
  const std::string text = "мы  пошли\tв   лес за грибами";
  std::vector<std::string> words;
  for (const auto& t : tokenize(text)) words.push_back(t.surface);
  std::string joined;
  for (const auto& w : words) joined += (joined.empty() ? "" : " ") + w;
  std::vector<std::string> again;
  for (const auto& t : tokenize(joined)) again.push_back(t.surface);
  EXPECT_EQ(words, again);
}

TEST(Render, CanonicalSpacing) {
  EXPECT_EQ(normalize("он  пошел ,домой ."), "он пошел, домой.");
  EXPECT_EQ(normalize("( скобки ) и « кавычки »"), "(скобки) и «кавычки»");
  EXPECT_EQ(normalize("строка раз ,\n строка два"), "строка раз,\nстрока два");
}

TEST(Samples, ReadThreeLines) {
  testutil::TempDir dir("corpus");
  testutil::write_file(dir / "s.jsonl",
                       R"({"id":"a","domain":"poetry","text_fixed":"x","extra":1})"
                       "\n"
                       R"({"id":"b","text_corrupted":"y","text_fixed":null})"
                       "\n\n"
                       R"({"id":"c","domain":"prose","text_corrupted":"z","text_fixed":"w"})"
                       "\n");
  const auto s = read_samples(dir / "s.jsonl");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].id, "a");
  EXPECT_FALSE(s[0].text_corrupted.has_value());
  EXPECT_EQ(s[1].domain, "default");
  EXPECT_FALSE(s[1].text_fixed.has_value());
  EXPECT_EQ(*s[2].text_corrupted, "z");
}

TEST(Samples, MissingTextIsAnError) {
  testutil::TempDir dir("corpus");
  testutil::write_file(dir / "s.jsonl", R"({"id":"a","domain":"poetry"})"
                                        "\n");
  try {
    read_samples(dir / "s.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("sample has no text"), std::string::npos);
  }
}

TEST(Samples, DuplicateIdCitesLine) {
  testutil::TempDir dir("corpus");
  std::string content;
  for (int i = 1; i <= 4; ++i) content += R"({"id":"s)" + std::to_string(i) + R"(","text_fixed":"t"})" "\n";
  content += R"({"id":"s2","text_fixed":"t"})" "\n";
  testutil::write_file(dir / "s.jsonl", content);
  try {
    read_samples(dir / "s.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":5:"), std::string::npos) << e.what();
  }
}

TEST(Samples, MalformedLineCitesLine) {
  testutil::TempDir dir("corpus");
  testutil::write_file(dir / "s.jsonl", R"({"id":"a","text_fixed":"t"})" "\n{broken\n");
  try {
    read_samples(dir / "s.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(Samples, RoundTrip) {
  testutil::TempDir dir("corpus");
  const std::vector<TextSample> in = {{"a", "poetry", "плохо", "хорошо"}, {"b", "prose", std::nullopt, "только"}};
  write_samples(dir / "s.jsonl", in);
  EXPECT_EQ(read_samples(dir / "s.jsonl"), in);
}

TEST(ExpandPairs, BothTextsGiveTwoInstances) {
  const auto out = expand_pairs({{"x", "d", "bad", "good"}});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].label, 1);
  EXPECT_EQ(out[1].label, 0);
  EXPECT_NE(out[0].id, out[1].id);
  EXPECT_EQ(out[0].sample_id, "x");
}

TEST(ExpandPairs, SizeFollowsSampleTypes) {
  // Poetry sample-type counts of the annotated corpus.
  const std::size_t both = 5133;
  const std::size_t corrupted_only = 3069;
  const std::size_t correct_only = 3971;
  std::vector<TextSample> samples;
  for (std::size_t i = 0; i < both; ++i) samples.push_back({"b" + std::to_string(i), "poetry", "c", "f"});
  for (std::size_t i = 0; i < corrupted_only; ++i) samples.push_back({"c" + std::to_string(i), "poetry", "c", {}});
  for (std::size_t i = 0; i < correct_only; ++i) samples.push_back({"f" + std::to_string(i), "poetry", {}, "f"});
  const auto out = expand_pairs(samples);
  EXPECT_EQ(out.size(), 17306u);
  std::size_t positives = 0;
  for (const auto& inst : out) positives += inst.label;
  EXPECT_EQ(positives, both + corrupted_only);
}
