#include <algorithm>
#include <fstream>

#include "chanaudit/csv.hpp"
#include "chanaudit/data.hpp"
#include "chanaudit/textlytics.hpp"
#include "chanaudit/utf8.hpp"

namespace chanaudit {

namespace {

struct Range {
  char32_t lo, hi;
};

// Extended_Pictographic, Unicode emoji-data.
constexpr Range kPictographic[] = {
    {0x00A9, 0x00A9},   {0x00AE, 0x00AE},   {0x203C, 0x203C},   {0x2049, 0x2049},   {0x2122, 0x2122},
    {0x2139, 0x2139},   {0x2194, 0x2199},   {0x21A9, 0x21AA},   {0x231A, 0x231B},   {0x2328, 0x2328},
    {0x2388, 0x2388},   {0x23CF, 0x23CF},   {0x23E9, 0x23F3},   {0x23F8, 0x23FA},   {0x24C2, 0x24C2},
    {0x25AA, 0x25AB},   {0x25B6, 0x25B6},   {0x25C0, 0x25C0},   {0x25FB, 0x25FE},   {0x2600, 0x2605},
    {0x2607, 0x2612},   {0x2614, 0x2685},   {0x2690, 0x2705},   {0x2708, 0x2712},   {0x2714, 0x2714},
    {0x2716, 0x2716},   {0x271D, 0x271D},   {0x2721, 0x2721},   {0x2728, 0x2728},   {0x2733, 0x2734},
    {0x2744, 0x2744},   {0x2747, 0x2747},   {0x274C, 0x274C},   {0x274E, 0x274E},   {0x2753, 0x2755},
    {0x2757, 0x2757},   {0x2763, 0x2767},   {0x2795, 0x2797},   {0x27A1, 0x27A1},   {0x27B0, 0x27B0},
    {0x27BF, 0x27BF},   {0x2934, 0x2935},   {0x2B05, 0x2B07},   {0x2B1B, 0x2B1C},   {0x2B50, 0x2B50},
    {0x2B55, 0x2B55},   {0x3030, 0x3030},   {0x303D, 0x303D},   {0x3297, 0x3297},   {0x3299, 0x3299},
    {0x1F000, 0x1F0FF}, {0x1F10D, 0x1F10F}, {0x1F12F, 0x1F12F}, {0x1F16C, 0x1F171}, {0x1F17E, 0x1F17F},
    {0x1F18E, 0x1F18E}, {0x1F191, 0x1F19A}, {0x1F1AD, 0x1F1E5}, {0x1F201, 0x1F20F}, {0x1F21A, 0x1F21A},
    {0x1F22F, 0x1F22F}, {0x1F232, 0x1F23A}, {0x1F23C, 0x1F23F}, {0x1F249, 0x1F3FA}, {0x1F400, 0x1F53D},
    {0x1F546, 0x1F64F}, {0x1F680, 0x1F6FF}, {0x1F774, 0x1F77F}, {0x1F7D5, 0x1F7FF}, {0x1F80C, 0x1F80F},
    {0x1F848, 0x1F84F}, {0x1F85A, 0x1F85F}, {0x1F888, 0x1F88F}, {0x1F8AE, 0x1F8FF}, {0x1F90C, 0x1F93A},
    {0x1F93C, 0x1F945}, {0x1F947, 0x1FAFF}, {0x1FC00, 0x1FFFD},
};

bool is_regional_indicator(char32_t cp) { return cp >= 0x1F1E6 && cp <= 0x1F1FF; }
bool is_modifier(char32_t cp) { return cp >= 0x1F3FB && cp <= 0x1F3FF; }
bool is_variation(char32_t cp) { return cp == 0xFE0F || cp == 0xFE0E; }
bool is_tag(char32_t cp) { return cp >= 0xE0020 && cp <= 0xE007F; }
bool is_keycap_base(char32_t cp) { return (cp >= '0' && cp <= '9') || cp == '#' || cp == '*'; }
constexpr char32_t kZwj = 0x200D;
constexpr char32_t kKeycap = 0x20E3;

// Extends a pictographic base at cps[i] over its modifiers, tags and ZWJ links.
std::size_t scan_pictographic(const std::u32string& cps, std::size_t i) {
  std::size_t j = i + 1;
  while (true) {
    while (j < cps.size() && (is_variation(cps[j]) || is_modifier(cps[j]) || is_tag(cps[j]))) ++j;
    if (j + 1 < cps.size() && cps[j] == kZwj && is_extended_pictographic(cps[j + 1])) {
      j += 2;
      continue;
    }
    return j;
  }
}

}  // namespace

bool is_extended_pictographic(char32_t cp) {
  auto it = std::upper_bound(std::begin(kPictographic), std::end(kPictographic), cp,
                             [](char32_t c, const Range& r) { return c < r.lo; });
  if (it == std::begin(kPictographic)) return false;
  --it;
  return cp <= it->hi;
}

std::string emoji_key(std::u32string_view sequence) {
  std::u32string kept;
  for (char32_t cp : sequence)
    if (!is_variation(cp) && !is_modifier(cp)) kept.push_back(cp);
  return utf8::to_hex_sequence(kept);
}

std::string emoji_glyph(std::string_view key) { return utf8::encode(utf8::from_hex_sequence(key)); }

std::vector<EmojiMatch> extract_emojis(std::string_view text) {
  const auto cps = utf8::decode(text);
  std::vector<EmojiMatch> out;
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t cp = cps[i];
    std::size_t end = i;
    if (is_regional_indicator(cp)) {
      end = i + 1 < cps.size() && is_regional_indicator(cps[i + 1]) ? i + 2 : i + 1;
    } else if (is_keycap_base(cp)) {
      std::size_t j = i + 1;
      if (j < cps.size() && is_variation(cps[j])) ++j;
      if (j < cps.size() && cps[j] == kKeycap) end = j + 1;
    } else if (is_extended_pictographic(cp)) {
      end = scan_pictographic(cps, i);
    }
    if (end > i) {
      std::u32string seq = cps.substr(i, end - i);
      out.push_back({seq, emoji_key(seq)});
      i = end;
    } else {
      ++i;
    }
  }
  return out;
}

EmojiRanking EmojiRanking::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open emoji ranking " + path.string());
  auto t = csv::Table::read(in);
  EmojiRanking r;
  for (const auto& row : t.rows()) {
    const double score = std::stod(std::string(t.require(row, "score")));
    if (!(score >= -1.0 && score <= 1.0)) throw csv::ParseError(row.line, "emoji score outside [-1,1]");
    r.set(emoji_key(utf8::from_hex_sequence(t.require(row, "sequence"))), score);
  }
  return r;
}

const EmojiRanking& EmojiRanking::defaults() {
  static const EmojiRanking r = load(data_file("emoji_sentiment_ranking.csv"));
  return r;
}

std::optional<double> EmojiRanking::score(std::string_view key) const {
  auto it = scores_.find(key);
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

std::size_t EmojiStats::total() const {
  std::size_t n = 0;
  for (const auto& [k, c] : counts) n += c;
  return n;
}

EmojiStats emoji_stats(std::string_view text, const EmojiRanking& ranking) {
  EmojiStats s;
  for (const auto& m : extract_emojis(text)) ++s.counts[m.key];
  double weighted = 0;
  std::size_t scored = 0;
  for (const auto& [key, count] : s.counts) {
    if (auto sc = ranking.score(key)) {
      weighted += *sc * static_cast<double>(count);
      scored += count;
    } else {
      s.unscored.insert(key);
    }
  }
  if (scored > 0) s.mean_score = weighted / static_cast<double>(scored);
  return s;
}

bool emoji_key_less(std::string_view a, std::string_view b) {
  return utf8::from_hex_sequence(a) < utf8::from_hex_sequence(b);
}

std::vector<EmojiCount> top_emojis(const std::vector<const ChannelRecord*>& slice, TextField field, std::size_t k,
                                   const EmojiRanking& ranking) {
  if (k == 0) throw std::invalid_argument("top_emojis: k must be at least 1");
  std::map<std::string, std::size_t> counts;
  auto add = [&](std::string_view text) {
    for (const auto& m : extract_emojis(text)) ++counts[m.key];
  };
  for (const auto* c : slice) {
    if (field == TextField::description)
      add(c->description);
    else
      for (const auto& p : c->posts) add(p.description);
  }
  std::vector<EmojiCount> out;
  for (const auto& [key, n] : counts) out.push_back({key, emoji_glyph(key), n, ranking.score(key)});
  std::sort(out.begin(), out.end(), [](const EmojiCount& a, const EmojiCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return emoji_key_less(a.key, b.key);
  });
  if (out.size() > k) out.resize(k);
  return out;
}

}  // namespace chanaudit
