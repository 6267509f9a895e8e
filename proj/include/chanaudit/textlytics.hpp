#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chanaudit/corpus.hpp"

namespace chanaudit {

/// Lowercased word tokens. Emoji and punctuation separate words.
std::vector<std::string> tokenize(std::string_view text);

// ---- polarity -------------------------------------------------------------

/// Dual-scale strength: positive in [1,5], negative in [-5,-1].
struct PolarityScore {
  int positive = 1;
  int negative = -1;
  int combined() const { return positive + negative; }
  bool operator==(const PolarityScore&) const = default;
};

class PolarityLexicon {
 public:
  /// `lexicon`: token,score with |score| in [2,5]; a trailing '*' marks a stem.
  /// `boosters`: token,boost with boost in [-2,2].
  static PolarityLexicon load(const std::filesystem::path& lexicon, const std::filesystem::path& boosters);
  static const PolarityLexicon& defaults();

  void add_word(std::string token, int score);
  void add_booster(std::string token, int boost);

  std::optional<int> word(std::string_view token) const;
  int booster(std::string_view token) const;
  static bool is_negation(std::string_view token);

 private:
  std::unordered_map<std::string, int> words_;
  std::vector<std::pair<std::string, int>> stems_;  // longest first
  std::unordered_map<std::string, int> boosters_;
};

PolarityScore polarity(std::string_view text, const PolarityLexicon& lexicon = PolarityLexicon::defaults());

// ---- emotions -------------------------------------------------------------

enum class Emotion { trust, surprise, sadness, joy, fear, disgust, anticipation, anger };
inline constexpr std::array<Emotion, 8> kEmotions = {Emotion::trust, Emotion::surprise, Emotion::sadness,
                                                     Emotion::joy,   Emotion::fear,     Emotion::disgust,
                                                     Emotion::anticipation, Emotion::anger};
std::string_view to_string(Emotion e);
std::optional<Emotion> parse_emotion(std::string_view s);

struct EmotionProfile {
  std::array<double, 8> values{};
  double operator[](Emotion e) const { return values[static_cast<std::size_t>(e)]; }
  double& operator[](Emotion e) { return values[static_cast<std::size_t>(e)]; }
  double sum() const;
  bool operator==(const EmotionProfile&) const = default;
};

nlohmann::json to_json(const EmotionProfile& p);

/// Provider failure (network, malformed reply). Distinct from an all-zero
/// profile, which means nothing was detected.
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmotionProvider {
 public:
  virtual ~EmotionProvider() = default;
  virtual EmotionProfile analyse(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

/// Offline default: share of each emotion among all token/emotion matches.
class LexiconEmotionProvider : public EmotionProvider {
 public:
  /// CSV token,emotion; a token may appear once per emotion.
  static std::shared_ptr<const LexiconEmotionProvider> load(const std::filesystem::path& path);
  static std::shared_ptr<const LexiconEmotionProvider> defaults();

  void add(std::string token, Emotion e);
  EmotionProfile analyse(std::string_view text) const override;
  std::string name() const override { return "lexicon"; }

 private:
  std::unordered_map<std::string, std::vector<Emotion>> words_;
};

/// Adapter for an external categorisation service. POSTs {"text": ...} as JSON
/// to the endpoint and expects {"emotions": {"anger": 0.1, ...}}.
class HttpEmotionProvider : public EmotionProvider {
 public:
  explicit HttpEmotionProvider(std::string endpoint, std::string path = "/emotions", std::string api_key = {});
  EmotionProfile analyse(std::string_view text) const override;
  std::string name() const override { return "http"; }

 private:
  std::string endpoint_;
  std::string path_;
  std::string api_key_;
};

EmotionProfile emotions(std::string_view text, const EmotionProvider& provider);

// ---- emoji ----------------------------------------------------------------

/// One emoji grapheme: flags, keycaps, modifier and ZWJ sequences included.
struct EmojiMatch {
  std::u32string sequence;  // as written
  std::string key;          // normalised lookup key, see emoji_key
};

/// Lookup key: upper-case hex code points joined by spaces, with variation
/// selectors and skin-tone modifiers removed ("2764" for both ❤ and ❤️).
std::string emoji_key(std::u32string_view sequence);
std::string emoji_glyph(std::string_view key);

std::vector<EmojiMatch> extract_emojis(std::string_view text);
bool is_extended_pictographic(char32_t cp);

class EmojiRanking {
 public:
  /// CSV with at least columns sequence,score.
  static EmojiRanking load(const std::filesystem::path& path);
  static const EmojiRanking& defaults();

  void set(std::string key, double score) { scores_[std::move(key)] = score; }
  std::optional<double> score(std::string_view key) const;
  std::size_t size() const { return scores_.size(); }

 private:
  std::map<std::string, double, std::less<>> scores_;
};

struct EmojiStats {
  std::map<std::string, std::size_t> counts;  // by emoji_key
  std::optional<double> mean_score;
  std::set<std::string> unscored;
  std::size_t total() const;
};

EmojiStats emoji_stats(std::string_view text, const EmojiRanking& ranking = EmojiRanking::defaults());

struct EmojiCount {
  std::string key;
  std::string glyph;
  std::size_t count = 0;
  std::optional<double> score;
};

enum class TextField { description, posts };

/// Most frequent emojis over the given channels' descriptions or post texts,
/// by count descending then code point order.
std::vector<EmojiCount> top_emojis(const std::vector<const ChannelRecord*>& slice, TextField field, std::size_t k,
                                   const EmojiRanking& ranking = EmojiRanking::defaults());

/// Code-point order of two emoji keys.
bool emoji_key_less(std::string_view a, std::string_view b);

}  // namespace chanaudit
