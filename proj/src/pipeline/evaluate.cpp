#include <stdexcept>

#include "chanaudit/pipeline.hpp"

namespace chanaudit {

using nlohmann::json;

LabeledChannels labeled_channels(const Corpus& corpus, const std::vector<ChannelAnalytics>& analytics,
                                 const std::map<std::string, int>& overrides) {
  if (analytics.size() != corpus.size()) throw std::invalid_argument("analytics do not cover the corpus");
  for (const auto& [id, v] : overrides) {
    if (!corpus.find(id)) throw std::invalid_argument("label override for unknown channel " + id);
    if (v != 0 && v != 1) throw std::invalid_argument("label override must be 0 or 1");
  }
  const auto prop = propagate_labels(corpus);
  LabeledChannels out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& c = corpus.channels()[i];
    if (analytics[i].channel_id != c.channel_id)
      throw std::invalid_argument("analytics out of order at channel " + c.channel_id);
    int label = -1;
    if (auto it = overrides.find(c.channel_id); it != overrides.end())
      label = it->second;
    else if (auto jt = prop.labels.find(c.channel_id); jt != prop.labels.end())
      label = static_cast<int>(jt->second.value);
    if (label < 0) continue;
    out.channels.push_back(&c);
    out.analytics.push_back(&analytics[i]);
    out.labels.push_back(label);
  }
  return out;
}

CorpusEvaluation evaluate_corpus(const LabeledChannels& data, const FeatureSpec& spec, ModelKind kind,
                                 const Hyperparams& h, int folds, std::uint64_t seed) {
  spec.validate();
  FoldBuilder build = [&](const std::vector<std::size_t>& tr, const std::vector<std::size_t>& te) {
    std::vector<const ChannelRecord*> chans;
    std::vector<const ChannelAnalytics*> an;
    for (auto i : tr) {
      chans.push_back(data.channels[i]);
      an.push_back(data.analytics[i]);
    }
    const auto pipe = FeaturePipeline::fit(chans, an, spec);
    FoldData d;
    for (auto i : tr) {
      d.train_x.push_back(pipe.transform(*data.channels[i], *data.analytics[i]));
      d.train_y.push_back(data.labels[i]);
    }
    for (auto i : te) d.test_x.push_back(pipe.transform(*data.channels[i], *data.analytics[i]));
    return d;
  };
  CorpusEvaluation e;
  e.report = evaluate_cv(kind, data.labels, build, h, folds, seed);
  e.spec = spec;
  for (const auto* c : data.channels) e.channel_ids.push_back(c->channel_id);
  return e;
}

TrainedModel train_corpus_model(const LabeledChannels& data, const FeatureSpec& spec, ModelKind kind,
                                const Hyperparams& h, std::uint64_t seed) {
  spec.validate();
  const auto pipe = FeaturePipeline::fit(data.channels, data.analytics, spec);
  const auto m = pipe.transform(data.channels, data.analytics, data.labels);
  auto model = train_model(kind, m, h, seed);
  model.pipeline = pipe;
  return model;
}

json to_json(const CorpusEvaluation& e, bool include_predictions) {
  json j = to_json(e.report, include_predictions);
  j["spec"] = to_json(e.spec);
  j["channels"] = e.channel_ids.size();
  if (include_predictions) j["channel_ids"] = e.channel_ids;
  return j;
}

}  // namespace chanaudit
