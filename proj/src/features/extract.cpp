#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "chanaudit/features.hpp"

namespace chanaudit {

namespace {

using Emit = std::vector<std::pair<std::string, double>>;

void vocab_slots(Emit& out, const std::string& prefix, const std::vector<std::string>& vocab, std::size_t k,
                 const std::map<std::string, std::size_t>* counts) {
  for (std::size_t i = 0; i < k; ++i) {
    if (i < vocab.size()) {
      double v = 0;
      if (counts)
        if (auto it = counts->find(vocab[i]); it != counts->end()) v = static_cast<double>(it->second);
      out.emplace_back(prefix + vocab[i], v);
    } else {
      out.emplace_back(prefix + "_slot" + std::to_string(i), 0.0);
    }
  }
}

double ratio(std::size_t num, std::size_t den) { return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }

// With c == nullptr only the names are meaningful.
Emit emit_group(FeatureGroup g, const ChannelRecord* c, const ChannelAnalytics* a, const Vocabularies& vocab) {
  Emit out;
  auto num = [](std::uint64_t v) { return static_cast<double>(v); };
  switch (g) {
    case FeatureGroup::activity_counts:
      out = {{"activity:view_count", c ? num(c->view_count) : 0},
             {"activity:video_count", c ? num(c->video_count) : 0},
             {"activity:subscriber_count", c ? num(c->subscriber_count.value_or(0)) : 0},
             {"activity:post_count", c ? num(c->post_count) : 0},
             {"activity:description_chars", c ? num(c->description_char_count) : 0},
             {"activity:keyword_count", c ? num(c->keywords.size()) : 0}};
      break;
    case FeatureGroup::graph_metrics:
      out = {{"graph:subscription_count", c ? num(c->subscription_count) : 0},
             {"graph:hidden_subscribers", c && (c->hidden_subscribers || !c->subscriber_count) ? 1.0 : 0.0},
             {"graph:links_count", c ? num(c->links_count) : 0}};
      break;
    case FeatureGroup::made_for_kids: {
      std::size_t flagged = 0, removed = 0, removed_flagged = 0;
      if (c)
        for (const auto& v : c->videos) {
          const bool mfk = v.made_for_kids.value_or(false);
          flagged += mfk;
          if (!v.status.available) {
            ++removed;
            removed_flagged += mfk;
          }
        }
      out = {{"mfk:flag_true", c && c->made_for_kids == true ? 1.0 : 0.0},
             {"mfk:flag_false", c && c->made_for_kids == false ? 1.0 : 0.0},
             {"mfk:gt_videos_ratio", c ? ratio(flagged, c->videos.size()) : 0},
             {"mfk:removed_videos_ratio", ratio(removed_flagged, removed)}};
      break;
    }
    case FeatureGroup::top_media: {
      std::map<std::string, std::size_t> counts;
      if (c)
        for (const auto& p : c->linked_platforms) ++counts[p.name];
      vocab_slots(out, "media:", vocab.media, group_size(g), &counts);
      break;
    }
    case FeatureGroup::top_keywords: {
      std::map<std::string, std::size_t> counts;
      if (c)
        for (const auto& kw : c->keywords) ++counts[normalise_keyword(kw)];
      vocab_slots(out, "keywords:", vocab.keywords, group_size(g), &counts);
      break;
    }
    case FeatureGroup::emotions:
      for (auto e : kEmotions)
        out.emplace_back("emotions:" + std::string(to_string(e)), a ? a->description_emotions[e] : 0.0);
      break;
    case FeatureGroup::top_topics: {
      std::map<std::string, std::size_t> counts;
      if (c)
        for (const auto& t : c->topic_categories) ++counts[topic_name(t)];
      vocab_slots(out, "topics:", vocab.topics, group_size(g), &counts);
      break;
    }
    case FeatureGroup::emoji_scores:
      out = {{"emoji_score:description", a ? a->description_emojis.mean_score.value_or(0.0) : 0},
             {"emoji_score:posts", a ? a->posts_emojis.mean_score.value_or(0.0) : 0}};
      break;
    case FeatureGroup::top_emojis_description:
      vocab_slots(out, "emoji_desc:", vocab.emojis_description, group_size(g), a ? &a->description_emojis.counts : nullptr);
      break;
    case FeatureGroup::top_emojis_posts:
      vocab_slots(out, "emoji_posts:", vocab.emojis_posts, group_size(g), a ? &a->posts_emojis.counts : nullptr);
      break;
    case FeatureGroup::polarity:
      out = {{"polarity:description_positive", a ? a->description_polarity.positive : 1.0},
             {"polarity:description_negative", a ? a->description_polarity.negative : -1.0},
             {"polarity:keywords_positive", a ? a->keywords_polarity.positive : 1.0},
             {"polarity:keywords_negative", a ? a->keywords_polarity.negative : -1.0},
             {"polarity:posts_positive", a ? a->posts_polarity.positive : 1.0},
             {"polarity:posts_negative", a ? a->posts_polarity.negative : -1.0}};
      break;
  }
  return out;
}

Emit emit_all(const FeatureSpec& spec, const ChannelRecord* c, const ChannelAnalytics* a, const Vocabularies& vocab) {
  Emit all;
  const std::set<std::string> logs(spec.log_transform_fields.begin(), spec.log_transform_fields.end());
  for (auto g : spec.active_groups) {
    for (auto& [name, v] : emit_group(g, c, a, vocab)) {
      if (spec.creation_time_only && is_activity_feature(name)) continue;
      if (logs.contains(name)) v = std::log1p(std::max(0.0, v));
      all.emplace_back(std::move(name), v);
    }
  }
  return all;
}

}  // namespace

std::vector<std::string> feature_names(const FeatureSpec& spec, const Vocabularies& vocab) {
  std::vector<std::string> names;
  for (auto& [n, v] : emit_all(spec, nullptr, nullptr, vocab)) names.push_back(std::move(n));
  return names;
}

FeatureVector extract(const ChannelRecord& c, const ChannelAnalytics& a, const FeatureSpec& spec,
                      const Vocabularies& vocab) {
  if (a.channel_id != c.channel_id)
    throw std::invalid_argument("analytics for " + a.channel_id + " passed with channel " + c.channel_id);
  FeatureVector fv;
  fv.channel_id = c.channel_id;
  for (auto& [n, v] : emit_all(spec, &c, &a, vocab)) {
    if (!std::isfinite(v)) throw std::domain_error("non-finite feature " + n + " for " + c.channel_id);
    fv.names.push_back(std::move(n));
    fv.values.push_back(v);
  }
  if (!c.videos.empty()) {
    auto label = label_from_videos(c.videos);
    if (label.suitable_videos + label.disturbing_videos > 0) fv.label = label;
  }
  return fv;
}

}  // namespace chanaudit
