#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chanaudit/corpus.hpp"
#include "chanaudit/features.hpp"
#include "chanaudit/learners.hpp"

namespace chanaudit {

// ---- labelled training sets -------------------------------------------------

/// Labelled channels with their analytics, in corpus order.
struct LabeledChannels {
  std::vector<const ChannelRecord*> channels;
  std::vector<const ChannelAnalytics*> analytics;
  std::vector<int> labels;

  std::size_t size() const { return channels.size(); }
};

/// `analytics` must be aligned with `corpus.channels()`. Overrides (0 or 1)
/// replace propagated labels and may label channels that have none.
LabeledChannels labeled_channels(const Corpus& corpus, const std::vector<ChannelAnalytics>& analytics,
                                 const std::map<std::string, int>& overrides = {});

struct CorpusEvaluation {
  EvalReport report;
  std::vector<std::string> channel_ids;
  FeatureSpec spec;
};

/// Stratified k-fold over channels. Vocabularies and the variance filter are
/// refitted on each training fold.
CorpusEvaluation evaluate_corpus(const LabeledChannels& data, const FeatureSpec& spec, ModelKind kind,
                                 const Hyperparams& h, int folds, std::uint64_t seed);

/// Fits the feature pipeline and classifier on every labelled channel.
TrainedModel train_corpus_model(const LabeledChannels& data, const FeatureSpec& spec, ModelKind kind,
                                const Hyperparams& h, std::uint64_t seed);

nlohmann::json to_json(const CorpusEvaluation& e, bool include_predictions = false);

// ---- ranking ----------------------------------------------------------------

enum class Severity { prob, prob_times_count };

std::string_view to_string(Severity s);
std::optional<Severity> parse_severity(std::string_view s);

struct GroupAttribution {
  FeatureGroup group;
  /// p(x) minus p(x with the group's features at their training means).
  double contribution = 0;
};

struct RankedChannel {
  std::string channel_id;
  double score = 0;
  double probability = 0;
  std::optional<double> disturbing_videos;
  std::vector<GroupAttribution> attributions;  // largest |contribution| first
  std::vector<std::string> flags;              // e.g. "missing:subscriber_count"
};

/// prob_times_count multiplies by the count when one is supplied and uses the
/// probability alone otherwise.
double severity_score(double probability, Severity s, std::optional<double> disturbing_videos);

/// Score descending, then channel_id ascending.
void sort_ranking(std::vector<RankedChannel>& ranking);

std::vector<GroupAttribution> attribute_groups(const TrainedModel& model, const std::vector<double>& x);

/// Scored fields that are absent from the record.
std::vector<std::string> missing_field_flags(const ChannelRecord& c);

/// Disturbing ground-truth videos per channel, for channels that have any.
std::map<std::string, double> disturbing_video_counts(const Corpus& corpus);

/// Needs a model that carries its feature pipeline. `analytics` aligned with the corpus.
std::vector<RankedChannel> rank_channels(const TrainedModel& model, const Corpus& corpus,
                                         const std::vector<ChannelAnalytics>& analytics, Severity severity,
                                         const std::map<std::string, double>& disturbing_counts = {});

nlohmann::json to_json(const RankedChannel& r);

// ---- synthetic corpora ------------------------------------------------------

enum class SignalMode {
  full,          // counts, keywords and description wording differ by class
  creation_only  // only keywords and description wording differ; counts share one distribution
};

/// Generator for corpora with planted class signal.
///
/// Each channel gets one to three ground-truth videos; disturbing channels
/// have at least one disturbing video, so label propagation recovers the
/// planted class. Keywords come from a shared pool plus a class-leaning pool
/// picked with probability `keyword_bias`. Descriptions mix neutral filler
/// with lexicon words of the class's polarity with probability `wording_bias`.
/// Counts are log-normal. In full mode the view, video and subscriber counts
/// of disturbing channels have their location raised by `count_shift`, and
/// they may carry more posts.
struct SynthOptions {
  std::size_t channels = 1400;
  double disturbing_fraction = 559.0 / 1338.0;
  SignalMode mode = SignalMode::full;
  double keyword_bias = 0.3;
  double wording_bias = 0.6;
  double count_shift = 0.8;
  std::uint64_t seed = 1;
};

Corpus synth_corpus(const SynthOptions& o);

}  // namespace chanaudit
