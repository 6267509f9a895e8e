#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chanaudit/corpus.hpp"
#include "chanaudit/textlytics.hpp"

namespace chanaudit {

// ---- per-channel text analytics --------------------------------------------

/// Means of per-post positive/negative strengths; (1,-1) with no posts.
struct MeanPolarity {
  double positive = 1.0;
  double negative = -1.0;
  bool operator==(const MeanPolarity&) const = default;
};

struct ChannelAnalytics {
  std::string channel_id;
  PolarityScore description_polarity;
  PolarityScore keywords_polarity;
  MeanPolarity posts_polarity;
  EmotionProfile description_emotions;
  EmojiStats description_emojis;
  EmojiStats posts_emojis;
};

struct AnalyticsContext {
  const PolarityLexicon* lexicon = &PolarityLexicon::defaults();
  std::shared_ptr<const EmotionProvider> emotions = LexiconEmotionProvider::defaults();
  const EmojiRanking* ranking = &EmojiRanking::defaults();
};

ChannelAnalytics analyse_channel(const ChannelRecord& c, const AnalyticsContext& ctx = {});
std::vector<ChannelAnalytics> analyse_corpus(const Corpus& corpus, const AnalyticsContext& ctx = {},
                                             unsigned threads = 0);
nlohmann::json to_json(const ChannelAnalytics& a);

// ---- spec -----------------------------------------------------------------

enum class FeatureGroup {
  activity_counts,
  graph_metrics,
  made_for_kids,
  top_media,
  top_keywords,
  emotions,
  top_topics,
  emoji_scores,
  top_emojis_description,
  top_emojis_posts,
  polarity,
};

inline constexpr std::array<FeatureGroup, 11> kFeatureGroups = {
    FeatureGroup::activity_counts,        FeatureGroup::graph_metrics,    FeatureGroup::made_for_kids,
    FeatureGroup::top_media,              FeatureGroup::top_keywords,     FeatureGroup::emotions,
    FeatureGroup::top_topics,             FeatureGroup::emoji_scores,     FeatureGroup::top_emojis_description,
    FeatureGroup::top_emojis_posts,       FeatureGroup::polarity};

std::string_view to_string(FeatureGroup g);
std::optional<FeatureGroup> parse_feature_group(std::string_view s);
std::size_t group_size(FeatureGroup g);
/// Group owning a feature name, from its prefix before ':'.
std::optional<FeatureGroup> feature_group_of(std::string_view name);

struct FeatureSpec {
  std::vector<FeatureGroup> active_groups{kFeatureGroups.begin(), kFeatureGroups.end()};
  std::vector<std::string> log_transform_fields = {
      "activity:view_count",  "activity:video_count",         "activity:subscriber_count",
      "activity:post_count",  "activity:description_chars",   "activity:keyword_count",
      "graph:links_count"};
  double variance_floor = 1e-6;
  bool creation_time_only = false;

  static FeatureSpec full() { return {}; }
  static FeatureSpec creation_time();
  void validate() const;
  bool operator==(const FeatureSpec&) const = default;
};

nlohmann::json to_json(const FeatureSpec& s);
FeatureSpec feature_spec_from_json(const nlohmann::json& j);

/// Name fragments that mark a feature as derived from channel activity.
const std::vector<std::string>& activity_markers();
/// Name-based check. Vocabulary items after the colon are not scanned, except
/// for the post emoji group which is activity-derived as a whole.
bool is_activity_feature(std::string_view name);

// ---- vocabularies ---------------------------------------------------------

enum class VocabField { keywords, topics, media, emojis_description, emojis_posts };

/// Top-k items by number of channels using them (keywords, topics, media) or
/// by occurrences (emojis); ties lexicographic, emojis by code point.
std::vector<std::string> build_vocabulary(const std::vector<const ChannelRecord*>& channels, VocabField field,
                                          std::size_t k);

std::string normalise_keyword(std::string_view kw);
/// "https://en.wikipedia.org/wiki/Action_game" -> "Action_game".
std::string topic_name(std::string_view topic);

struct Vocabularies {
  std::vector<std::string> keywords;
  std::vector<std::string> topics;
  std::vector<std::string> media;
  std::vector<std::string> emojis_description;
  std::vector<std::string> emojis_posts;

  static Vocabularies build(const std::vector<const ChannelRecord*>& channels);
  bool operator==(const Vocabularies&) const = default;
};

nlohmann::json to_json(const Vocabularies& v);
Vocabularies vocabularies_from_json(const nlohmann::json& j);

// ---- extraction -----------------------------------------------------------

/// Feature names for a FeatureSpec, before variance filtering. Vocabulary slots
/// without an item are named "<group>:_slotN" and extract to 0.
std::vector<std::string> feature_names(const FeatureSpec& spec, const Vocabularies& vocab);

struct FeatureVector {
  std::string channel_id;
  std::vector<double> values;
  std::vector<std::string> names;
  std::optional<ChannelLabel> label;
};

FeatureVector extract(const ChannelRecord& c, const ChannelAnalytics& a, const FeatureSpec& spec,
                      const Vocabularies& vocab);

struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::string> channel_ids;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;  // 1 disturbing, 0 suitable, -1 unlabeled

  std::size_t cols() const { return names.size(); }
  std::size_t size() const { return rows.size(); }
  std::vector<double> column(std::size_t j) const;
};

struct DroppedFeature {
  std::string name;
  double variance = 0;
};

struct Preprocessing {
  double variance_floor = 0;
  std::vector<std::string> input_names;
  std::vector<std::string> kept;
  std::vector<DroppedFeature> dropped;

  /// Drops constant columns and those with population variance below the floor.
  /// Throws when every column would go.
  static Preprocessing fit(const FeatureMatrix& m, double variance_floor);
  FeatureMatrix apply(const FeatureMatrix& m) const;
  std::vector<double> apply(const std::vector<double>& row) const;

 private:
  std::vector<std::size_t> keep_index_;
  friend Preprocessing preprocessing_from_json(const nlohmann::json& j);
};

nlohmann::json to_json(const Preprocessing& p);
Preprocessing preprocessing_from_json(const nlohmann::json& j);

/// Spec, vocabularies and variance filter fitted together on training channels.
struct FeaturePipeline {
  FeatureSpec spec;
  Vocabularies vocab;
  Preprocessing prep;

  static FeaturePipeline fit(const std::vector<const ChannelRecord*>& channels,
                             const std::vector<const ChannelAnalytics*>& analytics, const FeatureSpec& spec);
  std::vector<double> transform(const ChannelRecord& c, const ChannelAnalytics& a) const;
  FeatureMatrix transform(const std::vector<const ChannelRecord*>& channels,
                          const std::vector<const ChannelAnalytics*>& analytics,
                          const std::vector<int>& labels) const;
  const std::vector<std::string>& names() const { return prep.kept; }
};

nlohmann::json to_json(const FeaturePipeline& p);
FeaturePipeline feature_pipeline_from_json(const nlohmann::json& j);

/// Header of feature names, then channel_id,label,values per row.
void write_matrix_csv(const FeatureMatrix& m, std::ostream& out);
FeatureMatrix read_matrix_csv(std::istream& in);

}  // namespace chanaudit
