#include <fstream>

#include <httplib.h>

#include "chanaudit/csv.hpp"
#include "chanaudit/data.hpp"
#include "chanaudit/textlytics.hpp"
#include "chanaudit/utf8.hpp"

namespace chanaudit {

using nlohmann::json;

std::string_view to_string(Emotion e) {
  switch (e) {
    case Emotion::trust: return "trust";
    case Emotion::surprise: return "surprise";
    case Emotion::sadness: return "sadness";
    case Emotion::joy: return "joy";
    case Emotion::fear: return "fear";
    case Emotion::disgust: return "disgust";
    case Emotion::anticipation: return "anticipation";
    case Emotion::anger: return "anger";
  }
  return "?";
}

std::optional<Emotion> parse_emotion(std::string_view s) {
  for (auto e : kEmotions)
    if (to_string(e) == s) return e;
  return std::nullopt;
}

double EmotionProfile::sum() const {
  double s = 0;
  for (double v : values) s += v;
  return s;
}

json to_json(const EmotionProfile& p) {
  json j = json::object();
  for (auto e : kEmotions) j[std::string(to_string(e))] = p[e];
  return j;
}

std::shared_ptr<const LexiconEmotionProvider> LexiconEmotionProvider::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open emotion lexicon " + path.string());
  auto t = csv::Table::read(in);
  auto p = std::make_shared<LexiconEmotionProvider>();
  for (const auto& row : t.rows()) {
    auto e = parse_emotion(t.require(row, "emotion"));
    if (!e) throw csv::ParseError(row.line, "unknown emotion '" + std::string(t.get(row, "emotion")) + "'");
    p->add(std::string(t.require(row, "token")), *e);
  }
  return p;
}

std::shared_ptr<const LexiconEmotionProvider> LexiconEmotionProvider::defaults() {
  static const auto p = load(data_file("emotion_lexicon.csv"));
  return p;
}

void LexiconEmotionProvider::add(std::string token, Emotion e) {
  auto& v = words_[utf8::ascii_lower(token)];
  if (std::find(v.begin(), v.end(), e) == v.end()) v.push_back(e);
}

EmotionProfile LexiconEmotionProvider::analyse(std::string_view text) const {
  EmotionProfile out;
  std::size_t total = 0;
  for (const auto& tok : tokenize(text)) {
    auto it = words_.find(tok);
    if (it == words_.end() && tok.size() > 3 && tok.back() == 's') it = words_.find(tok.substr(0, tok.size() - 1));
    if (it == words_.end()) continue;
    for (auto e : it->second) {
      out[e] += 1.0;
      ++total;
    }
  }
  if (total == 0) return out;
  for (auto& v : out.values) v /= static_cast<double>(total);
  return out;
}

HttpEmotionProvider::HttpEmotionProvider(std::string endpoint, std::string path, std::string api_key)
    : endpoint_(std::move(endpoint)), path_(std::move(path)), api_key_(std::move(api_key)) {}

EmotionProfile HttpEmotionProvider::analyse(std::string_view text) const {
  httplib::Client cli(endpoint_);
  cli.set_connection_timeout(5, 0);
  cli.set_read_timeout(30, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = cli.Post(path_, headers, json{{"text", std::string(text)}}.dump(), "application/json");
  if (!res) throw ProviderError("emotion service " + endpoint_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw ProviderError("emotion service returned HTTP " + std::to_string(res->status));
  EmotionProfile out;
  try {
    const auto doc = json::parse(res->body);
    const auto& emo = doc.at("emotions");
    for (auto e : kEmotions) {
      const double v = emo.value(std::string(to_string(e)), 0.0);
      if (!(v >= 0.0 && v <= 1.0)) throw ProviderError("emotion value out of range for " + std::string(to_string(e)));
      out[e] = v;
    }
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed emotion service reply: ") + e.what());
  }
  return out;
}

EmotionProfile emotions(std::string_view text, const EmotionProvider& provider) { return provider.analyse(text); }

}  // namespace chanaudit
