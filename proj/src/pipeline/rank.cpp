#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chanaudit/pipeline.hpp"

namespace chanaudit {

using nlohmann::json;

std::string_view to_string(Severity s) { return s == Severity::prob ? "prob" : "prob_times_count"; }

std::optional<Severity> parse_severity(std::string_view s) {
  if (s == "prob") return Severity::prob;
  if (s == "prob_times_count") return Severity::prob_times_count;
  return std::nullopt;
}

double severity_score(double probability, Severity s, std::optional<double> disturbing_videos) {
  if (s == Severity::prob_times_count && disturbing_videos) return probability * *disturbing_videos;
  return probability;
}

void sort_ranking(std::vector<RankedChannel>& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const RankedChannel& a, const RankedChannel& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.channel_id < b.channel_id;
  });
}

std::vector<GroupAttribution> attribute_groups(const TrainedModel& model, const std::vector<double>& x) {
  if (x.size() != model.feature_names.size() || model.feature_means.size() != x.size())
    throw ModelError("attribution input does not match the model features");
  const double p = model.predict(x);
  std::vector<GroupAttribution> out;
  for (auto g : kFeatureGroups) {
    auto masked = x;
    bool any = false;
    for (std::size_t j = 0; j < x.size(); ++j)
      if (feature_group_of(model.feature_names[j]) == g) {
        masked[j] = model.feature_means[j];
        any = true;
      }
    if (any) out.push_back({g, p - model.predict(masked)});
  }
  std::stable_sort(out.begin(), out.end(), [](const GroupAttribution& a, const GroupAttribution& b) {
    return std::abs(a.contribution) > std::abs(b.contribution);
  });
  return out;
}

std::vector<std::string> missing_field_flags(const ChannelRecord& c) {
  std::vector<std::string> f;
  if (!c.subscriber_count && !c.hidden_subscribers) f.push_back("missing:subscriber_count");
  if (!c.made_for_kids) f.push_back("missing:made_for_kids");
  if (!c.published_at) f.push_back("missing:published_at");
  return f;
}

std::map<std::string, double> disturbing_video_counts(const Corpus& corpus) {
  std::map<std::string, double> out;
  for (const auto& c : corpus.channels()) {
    const auto l = label_from_videos(c.videos);
    if (l.disturbing_videos) out[c.channel_id] = static_cast<double>(l.disturbing_videos);
  }
  return out;
}

std::vector<RankedChannel> rank_channels(const TrainedModel& model, const Corpus& corpus,
                                         const std::vector<ChannelAnalytics>& analytics, Severity severity,
                                         const std::map<std::string, double>& disturbing_counts) {
  if (!model.pipeline) throw ModelError("ranking needs a model saved with its feature pipeline");
  if (analytics.size() != corpus.size()) throw std::invalid_argument("analytics do not cover the corpus");
  std::vector<RankedChannel> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& c = corpus.channels()[i];
    if (analytics[i].channel_id != c.channel_id)
      throw std::invalid_argument("analytics out of order at channel " + c.channel_id);
    const auto x = model.pipeline->transform(c, analytics[i]);
    RankedChannel r;
    r.channel_id = c.channel_id;
    r.probability = model.predict(x);
    if (auto it = disturbing_counts.find(c.channel_id); it != disturbing_counts.end()) r.disturbing_videos = it->second;
    r.score = severity_score(r.probability, severity, r.disturbing_videos);
    r.attributions = attribute_groups(model, x);
    r.flags = missing_field_flags(c);
    out.push_back(std::move(r));
  }
  sort_ranking(out);
  return out;
}

json to_json(const RankedChannel& r) {
  json attr = json::array();
  for (const auto& a : r.attributions)
    attr.push_back({{"group", std::string(to_string(a.group))}, {"contribution", a.contribution}});
  json j{{"channel_id", r.channel_id},
         {"score", r.score},
         {"probability", r.probability},
         {"attributions", attr},
         {"flags", r.flags}};
  if (r.disturbing_videos) j["disturbing_videos"] = *r.disturbing_videos;
  return j;
}

}  // namespace chanaudit
