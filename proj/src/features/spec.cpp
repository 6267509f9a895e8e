#include <algorithm>
#include <map>
#include <set>

#include "chanaudit/features.hpp"
#include "chanaudit/utf8.hpp"

namespace chanaudit {

using nlohmann::json;

std::string_view to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::activity_counts: return "activity_counts";
    case FeatureGroup::graph_metrics: return "graph_metrics";
    case FeatureGroup::made_for_kids: return "made_for_kids";
    case FeatureGroup::top_media: return "top_media";
    case FeatureGroup::top_keywords: return "top_keywords";
    case FeatureGroup::emotions: return "emotions";
    case FeatureGroup::top_topics: return "top_topics";
    case FeatureGroup::emoji_scores: return "emoji_scores";
    case FeatureGroup::top_emojis_description: return "top_emojis_description";
    case FeatureGroup::top_emojis_posts: return "top_emojis_posts";
    case FeatureGroup::polarity: return "polarity";
  }
  return "?";
}

std::optional<FeatureGroup> parse_feature_group(std::string_view s) {
  for (auto g : kFeatureGroups)
    if (to_string(g) == s) return g;
  return std::nullopt;
}

std::optional<FeatureGroup> feature_group_of(std::string_view name) {
  static const std::pair<std::string_view, FeatureGroup> prefixes[] = {
      {"activity", FeatureGroup::activity_counts},       {"graph", FeatureGroup::graph_metrics},
      {"mfk", FeatureGroup::made_for_kids},              {"media", FeatureGroup::top_media},
      {"keywords", FeatureGroup::top_keywords},          {"emotions", FeatureGroup::emotions},
      {"topics", FeatureGroup::top_topics},              {"emoji_score", FeatureGroup::emoji_scores},
      {"emoji_desc", FeatureGroup::top_emojis_description}, {"emoji_posts", FeatureGroup::top_emojis_posts},
      {"polarity", FeatureGroup::polarity}};
  const auto prefix = name.substr(0, name.find(':'));
  for (const auto& [p, g] : prefixes)
    if (prefix == p) return g;
  return std::nullopt;
}

std::size_t group_size(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::activity_counts: return 6;
    case FeatureGroup::graph_metrics: return 3;
    case FeatureGroup::made_for_kids: return 4;
    case FeatureGroup::top_media: return 11;
    case FeatureGroup::top_keywords: return 10;
    case FeatureGroup::emotions: return 8;
    case FeatureGroup::top_topics: return 11;
    case FeatureGroup::emoji_scores: return 2;
    case FeatureGroup::top_emojis_description: return 10;
    case FeatureGroup::top_emojis_posts: return 10;
    case FeatureGroup::polarity: return 6;
  }
  return 0;
}

FeatureSpec FeatureSpec::creation_time() {
  FeatureSpec s;
  s.creation_time_only = true;
  std::erase(s.active_groups, FeatureGroup::top_emojis_posts);
  std::erase_if(s.log_transform_fields, [](const std::string& f) { return is_activity_feature(f); });
  return s;
}

void FeatureSpec::validate() const {
  if (active_groups.empty()) throw std::invalid_argument("feature spec has no active groups");
  std::set<FeatureGroup> seen;
  for (auto g : active_groups)
    if (!seen.insert(g).second) throw std::invalid_argument("duplicate feature group " + std::string(to_string(g)));
  if (!(variance_floor >= 0)) throw std::invalid_argument("variance_floor must be >= 0");
  if (creation_time_only && seen.contains(FeatureGroup::top_emojis_posts))
    throw std::invalid_argument("creation-time spec cannot include top_emojis_posts");
  if (creation_time_only)
    for (const auto& f : log_transform_fields)
      if (is_activity_feature(f)) throw std::invalid_argument("creation-time spec lists activity field " + f);
}

json to_json(const FeatureSpec& s) {
  json groups = json::array();
  for (auto g : s.active_groups) groups.push_back(std::string(to_string(g)));
  return json{{"active_groups", groups},
              {"log_transform_fields", s.log_transform_fields},
              {"variance_floor", s.variance_floor},
              {"creation_time_only", s.creation_time_only}};
}

FeatureSpec feature_spec_from_json(const json& j) {
  FeatureSpec s;
  if (j.value("creation_time_only", false)) s = FeatureSpec::creation_time();
  if (j.contains("active_groups")) {
    s.active_groups.clear();
    for (const auto& g : j.at("active_groups")) {
      auto parsed = parse_feature_group(g.get<std::string>());
      if (!parsed) throw std::invalid_argument("unknown feature group '" + g.get<std::string>() + "'");
      s.active_groups.push_back(*parsed);
    }
  }
  if (j.contains("log_transform_fields")) s.log_transform_fields = j.at("log_transform_fields").get<std::vector<std::string>>();
  s.variance_floor = j.value("variance_floor", s.variance_floor);
  s.validate();
  return s;
}

const std::vector<std::string>& activity_markers() {
  static const std::vector<std::string> m = {"view_count", "video_count",  "subscriber_count", "subscription_count",
                                             "post_count", "posts",        "videos"};
  return m;
}

bool is_activity_feature(std::string_view name) {
  const auto colon = name.find(':');
  const auto group = name.substr(0, colon);
  if (group == "emoji_posts") return true;
  if (group == "keywords" || group == "topics" || group == "media" || group == "emoji_desc") return false;
  for (const auto& m : activity_markers())
    if (name.find(m) != std::string_view::npos) return true;
  return false;
}

std::string normalise_keyword(std::string_view kw) {
  std::size_t b = 0, e = kw.size();
  while (b < e && std::isspace(static_cast<unsigned char>(kw[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(kw[e - 1]))) --e;
  return utf8::ascii_lower(kw.substr(b, e - b));
}

std::string topic_name(std::string_view topic) {
  auto slash = topic.rfind('/');
  return std::string(slash == std::string_view::npos ? topic : topic.substr(slash + 1));
}

std::vector<std::string> build_vocabulary(const std::vector<const ChannelRecord*>& channels, VocabField field,
                                          std::size_t k) {
  if (field == VocabField::emojis_description || field == VocabField::emojis_posts) {
    if (channels.empty() || k == 0) return {};
    auto top = top_emojis(channels, field == VocabField::emojis_description ? TextField::description : TextField::posts,
                          k);
    std::vector<std::string> out;
    for (auto& e : top) out.push_back(e.key);
    return out;
  }
  std::map<std::string, std::size_t> freq;
  for (const auto* c : channels) {
    std::set<std::string> items;
    switch (field) {
      case VocabField::keywords:
        for (const auto& kw : c->keywords)
          if (auto n = normalise_keyword(kw); !n.empty()) items.insert(n);
        break;
      case VocabField::topics:
        for (const auto& t : c->topic_categories)
          if (auto n = topic_name(t); !n.empty()) items.insert(n);
        break;
      case VocabField::media:
        for (const auto& p : c->linked_platforms) items.insert(p.name);
        break;
      default: break;
    }
    for (const auto& i : items) ++freq[i];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(ranked[i].first);
  return out;
}

Vocabularies Vocabularies::build(const std::vector<const ChannelRecord*>& channels) {
  Vocabularies v;
  v.keywords = build_vocabulary(channels, VocabField::keywords, group_size(FeatureGroup::top_keywords));
  v.topics = build_vocabulary(channels, VocabField::topics, group_size(FeatureGroup::top_topics));
  v.media = build_vocabulary(channels, VocabField::media, group_size(FeatureGroup::top_media));
  v.emojis_description =
      build_vocabulary(channels, VocabField::emojis_description, group_size(FeatureGroup::top_emojis_description));
  v.emojis_posts = build_vocabulary(channels, VocabField::emojis_posts, group_size(FeatureGroup::top_emojis_posts));
  return v;
}

json to_json(const Vocabularies& v) {
  return json{{"keywords", v.keywords},
              {"topics", v.topics},
              {"media", v.media},
              {"emojis_description", v.emojis_description},
              {"emojis_posts", v.emojis_posts}};
}

Vocabularies vocabularies_from_json(const json& j) {
  Vocabularies v;
  auto get = [&](const char* k) { return j.value(k, std::vector<std::string>{}); };
  v.keywords = get("keywords");
  v.topics = get("topics");
  v.media = get("media");
  v.emojis_description = get("emojis_description");
  v.emojis_posts = get("emojis_posts");
  return v;
}

}  // namespace chanaudit
