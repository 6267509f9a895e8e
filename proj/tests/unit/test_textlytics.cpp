#include <doctest.h>

#include <algorithm>
#include <random>

#include "chanaudit/textlytics.hpp"
#include "chanaudit/utf8.hpp"

using namespace chanaudit;

namespace {

// Max/min over lexicon hits with no modifiers.
PolarityScore naive_polarity(const std::vector<std::string>& tokens, const PolarityLexicon& lex) {
  PolarityScore s;
  for (const auto& t : tokens)
    if (auto v = lex.word(t)) {
      s.positive = std::max(s.positive, *v);
      s.negative = std::min(s.negative, *v);
    }
  return s;
}

PolarityLexicon tiny_lexicon() {
  PolarityLexicon lex;
  lex.add_word("good", 3);
  lex.add_word("bad", -3);
  lex.add_word("hat*", -4);
  lex.add_booster("very", 1);
  lex.add_booster("slightly", -1);
  return lex;
}

}  // namespace

TEST_CASE("tokenizer") {
  CHECK(tokenize("Don't STOP-me now!!") == std::vector<std::string>{"don't", "stop-me", "now"});
  CHECK(tokenize("love❤️games") == std::vector<std::string>{"love", "games"});
  CHECK(tokenize("it’s -- fine") == std::vector<std::string>{"it's", "fine"});
  CHECK(tokenize("").empty());
}

TEST_CASE("empty text is neutral") {
  auto s = polarity("");
  CHECK(s.positive == 1);
  CHECK(s.negative == -1);
  CHECK(s.combined() == 0);
}

TEST_CASE("default lexicon direction") {
  CHECK(polarity("I love this wonderful channel").combined() > 0);
  CHECK(polarity("horrible scary videos").combined() < 0);
  CHECK(polarity("I love this wonderful channel").positive == 5);
}

TEST_CASE("boosters negation and stems") {
  auto lex = tiny_lexicon();
  CHECK(polarity("good", lex).positive == 3);
  CHECK(polarity("very good", lex).positive == 4);
  CHECK(polarity("slightly bad", lex).negative == -2);
  CHECK(polarity("not good", lex) == PolarityScore{1, -3});
  CHECK(polarity("not very good", lex) == PolarityScore{1, -4});
  CHECK(polarity("not bad", lex) == PolarityScore{1, -1});
  CHECK(polarity("hateful", lex).negative == -4);
  CHECK(polarity("not so good", lex).positive == 3);
}

TEST_CASE("unmodified text agrees with naive oracle") {
  const auto& lex = PolarityLexicon::defaults();
  const std::vector<std::string> words = {"love", "hate", "great", "awful", "fun", "channel", "video",
                                          "happy", "sad", "kill", "win", "games", "cool", "worst"};
  std::mt19937 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> toks;
    const int n = static_cast<int>(rng() % 12);
    std::string text;
    for (int i = 0; i < n; ++i) {
      toks.push_back(words[rng() % words.size()]);
      text += toks.back() + " ";
    }
    CHECK(polarity(text, lex) == naive_polarity(toks, lex));
  }
}

TEST_CASE("polarity always within scale") {
  std::mt19937 rng(3);
  const std::vector<std::string> words = {"not", "very", "extremely", "love", "hate", "never", "best", "terrible"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (int i = 0; i < 10; ++i) text += words[rng() % words.size()] + " ";
    auto s = polarity(text);
    CHECK(s.positive >= 1);
    CHECK(s.positive <= 5);
    CHECK(s.negative <= -1);
    CHECK(s.negative >= -5);
  }
}

TEST_CASE("lexicon emotions") {
  auto p = LexiconEmotionProvider::defaults();
  auto prof = emotions("kill", *p);
  CHECK(prof[Emotion::anger] > 0);
  CHECK(prof.sum() == doctest::Approx(1.0));
  CHECK(emotions("the and of", *p).sum() == 0.0);

  LexiconEmotionProvider custom;
  custom.add("furious", Emotion::anger);
  custom.add("party", Emotion::joy);
  auto one = custom.analyse("FURIOUS!!");
  CHECK(one[Emotion::anger] == 1.0);
  auto two = custom.analyse("furious party party party");
  CHECK(two[Emotion::joy] == doctest::Approx(0.75));
  CHECK(two[Emotion::anger] == doctest::Approx(0.25));
}

TEST_CASE("http emotion provider reports transport failure") {
  HttpEmotionProvider dead("http://127.0.0.1:1");
  CHECK_THROWS_AS(dead.analyse("anything"), ProviderError);
}

TEST_CASE("emoji extraction") {
  auto ms = extract_emojis("hi ❤️ and ❤ 👍🏽 🇺🇸 1️⃣ 👨‍👩‍👧 ©");
  std::vector<std::string> keys;
  for (const auto& m : ms) keys.push_back(m.key);
  CHECK(keys == std::vector<std::string>{"2764", "2764", "1F44D", "1F1FA 1F1F8", "0031 20E3",
                                         "1F468 200D 1F469 200D 1F467", "00A9"});
  CHECK(extract_emojis("plain 123 #tag").empty());
  CHECK(emoji_glyph("2764") == "❤");
}

TEST_CASE("heart scores 0.747") {
  const auto& r = EmojiRanking::defaults();
  REQUIRE(r.score("2764"));
  CHECK(*r.score("2764") == doctest::Approx(0.747).epsilon(1e-12));
  auto s = emoji_stats("hello ❤");
  REQUIRE(s.mean_score);
  CHECK(*s.mean_score == doctest::Approx(0.747));
  CHECK(s.unscored.empty());
  CHECK(!emoji_stats("no emoji here").mean_score);
}

TEST_CASE("unscored emojis are reported") {
  EmojiRanking r;
  r.set("2764", 0.747);
  auto s = emoji_stats("❤❤🎮", r);
  CHECK(s.total() == 3);
  CHECK(s.counts.at("2764") == 2);
  CHECK(s.unscored == std::set<std::string>{"1F3AE"});
  CHECK(*s.mean_score == doctest::Approx(0.747));
}

TEST_CASE("mean score stays within present range") {
  const auto& r = EmojiRanking::defaults();
  const std::vector<std::string> pool = {"❤", "😍", "😂", "😭", "🎮", "👍", "💩", "🔥", "😡", "🇺🇸", "a", " ", "x"};
  std::mt19937 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::string text;
    const int n = 1 + static_cast<int>(rng() % 15);
    for (int i = 0; i < n; ++i) text += pool[rng() % pool.size()];
    auto s = emoji_stats(text, r);
    double lo = 2, hi = -2;
    for (const auto& [k, c] : s.counts)
      if (auto v = r.score(k)) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
    if (lo > hi) {
      CHECK(!s.mean_score);
      continue;
    }
    REQUIRE(s.mean_score);
    CHECK(*s.mean_score >= lo - 1e-12);
    CHECK(*s.mean_score <= hi + 1e-12);
  }
}

TEST_CASE("top emojis order by count then code point") {
  ChannelRecord a, b;
  a.description = "🎮🎮❤ 😂";
  b.description = "😂 ❤";
  PostRecord p;
  p.description = "🔥🔥🔥";
  b.posts.push_back(p);
  auto top = top_emojis({&a, &b}, TextField::description, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].key == "2764");
  CHECK(top[1].key == "1F3AE");
  CHECK(top[0].count == 2);
  auto posts = top_emojis({&a, &b}, TextField::posts, 5);
  REQUIRE(posts.size() == 1);
  CHECK(posts[0].count == 3);
  CHECK_THROWS(top_emojis({&a}, TextField::description, 0));
}
