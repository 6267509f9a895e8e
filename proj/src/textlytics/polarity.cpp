#include <algorithm>
#include <fstream>

#include "chanaudit/csv.hpp"
#include "chanaudit/data.hpp"
#include "chanaudit/textlytics.hpp"
#include "chanaudit/utf8.hpp"

namespace chanaudit {

namespace {

bool is_word_cp(char32_t cp) {
  if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp < 0xC0 || cp == 0xD7 || cp == 0xF7) return false;
  if (utf8::is_whitespace(cp) || is_extended_pictographic(cp)) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFE00 && cp <= 0xFE0F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  if (cp >= 0x1F000) return false;
  if (cp >= 0xE0000 && cp <= 0xE007F) return false;
  return cp != 0xFFFD;
}

bool is_joiner(char32_t cp) { return cp == '\'' || cp == 0x2019 || cp == '-'; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  const auto cps = utf8::decode(text);
  std::vector<std::string> out;
  std::u32string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(utf8::ascii_lower(utf8::encode(cur)));
    cur.clear();
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (is_word_cp(cp)) {
      cur.push_back(cp);
    } else if (is_joiner(cp) && !cur.empty() && i + 1 < cps.size() && is_word_cp(cps[i + 1])) {
      cur.push_back(cp == 0x2019 ? U'\'' : cp);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

PolarityLexicon PolarityLexicon::load(const std::filesystem::path& lexicon, const std::filesystem::path& boosters) {
  PolarityLexicon lex;
  {
    std::ifstream in(lexicon);
    if (!in) throw std::runtime_error("cannot open polarity lexicon " + lexicon.string());
    auto t = csv::Table::read(in);
    for (const auto& row : t.rows()) {
      const int score = std::stoi(std::string(t.require(row, "score")));
      if (std::abs(score) < 1 || std::abs(score) > 5)
        throw csv::ParseError(row.line, "polarity score out of range: " + std::to_string(score));
      lex.add_word(std::string(t.require(row, "token")), score);
    }
  }
  std::ifstream in(boosters);
  if (!in) throw std::runtime_error("cannot open booster list " + boosters.string());
  auto t = csv::Table::read(in);
  for (const auto& row : t.rows())
    lex.add_booster(std::string(t.require(row, "token")), std::stoi(std::string(t.require(row, "boost"))));
  return lex;
}

const PolarityLexicon& PolarityLexicon::defaults() {
  static const PolarityLexicon lex = load(data_file("polarity_lexicon.csv"), data_file("booster_words.csv"));
  return lex;
}

void PolarityLexicon::add_word(std::string token, int score) {
  token = utf8::ascii_lower(token);
  if (!token.empty() && token.back() == '*') {
    token.pop_back();
    stems_.emplace_back(std::move(token), score);
    std::stable_sort(stems_.begin(), stems_.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  } else {
    words_[std::move(token)] = score;
  }
}

void PolarityLexicon::add_booster(std::string token, int boost) { boosters_[utf8::ascii_lower(token)] = boost; }

std::optional<int> PolarityLexicon::word(std::string_view token) const {
  if (auto it = words_.find(std::string(token)); it != words_.end()) return it->second;
  for (const auto& [stem, score] : stems_)
    if (token.starts_with(stem)) return score;
  return std::nullopt;
}

int PolarityLexicon::booster(std::string_view token) const {
  auto it = boosters_.find(std::string(token));
  return it == boosters_.end() ? 0 : it->second;
}

bool PolarityLexicon::is_negation(std::string_view token) {
  static const std::set<std::string, std::less<>> words = {
      "not",     "no",       "never",  "neither", "nor",     "none",    "nobody",  "nothing", "nowhere",
      "cannot",  "can't",    "cant",   "don't",   "dont",    "doesn't", "doesnt",  "didn't",  "didnt",
      "isn't",   "isnt",     "aren't", "arent",   "wasn't",  "wasnt",   "weren't", "werent",  "won't",
      "wont",    "wouldn't", "wouldnt", "shouldn't", "shouldnt", "couldn't", "couldnt", "haven't", "havent",
      "hasn't",  "hasnt",    "hadn't", "hadnt",   "ain't",   "aint",    "without"};
  return words.contains(token);
}

PolarityScore polarity(std::string_view text, const PolarityLexicon& lexicon) {
  PolarityScore out;
  const auto tokens = tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto base = lexicon.word(tokens[i]);
    if (!base || *base == 0) continue;
    int v = *base;
    std::size_t j = i;
    if (j > 0) {
      if (int b = lexicon.booster(tokens[j - 1]); b != 0) {
        const int mag = std::clamp(std::abs(v) + b, 1, 5);
        v = v > 0 ? mag : -mag;
        --j;
      }
    }
    if (j > 0 && PolarityLexicon::is_negation(tokens[j - 1])) v = v > 0 ? -v : 0;
    out.positive = std::max(out.positive, v);
    out.negative = std::min(out.negative, v);
  }
  out.positive = std::min(out.positive, 5);
  out.negative = std::max(out.negative, -5);
  return out;
}

}  // namespace chanaudit
