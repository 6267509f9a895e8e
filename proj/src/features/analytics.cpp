#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "chanaudit/features.hpp"

namespace chanaudit {

using nlohmann::json;

namespace {

json emoji_json(const EmojiStats& s) {
  json counts = json::object();
  for (const auto& [k, n] : s.counts) counts[k] = n;
  json j{{"counts", counts}, {"unscored", s.unscored}};
  j["mean_score"] = s.mean_score ? json(*s.mean_score) : json(nullptr);
  return j;
}

}  // namespace

ChannelAnalytics analyse_channel(const ChannelRecord& c, const AnalyticsContext& ctx) {
  ChannelAnalytics a;
  a.channel_id = c.channel_id;
  a.description_polarity = polarity(c.description, *ctx.lexicon);
  for (const auto& kw : c.keywords) {
    auto p = polarity(kw, *ctx.lexicon);
    a.keywords_polarity.positive = std::max(a.keywords_polarity.positive, p.positive);
    a.keywords_polarity.negative = std::min(a.keywords_polarity.negative, p.negative);
  }
  if (!c.posts.empty()) {
    double pos = 0, neg = 0;
    std::string all;
    for (const auto& p : c.posts) {
      auto s = polarity(p.description, *ctx.lexicon);
      pos += s.positive;
      neg += s.negative;
      all += p.description;
      all += '\n';
    }
    const double n = static_cast<double>(c.posts.size());
    a.posts_polarity = {pos / n, neg / n};
    a.posts_emojis = emoji_stats(all, *ctx.ranking);
  }
  a.description_emotions = ctx.emotions->analyse(c.description);
  a.description_emojis = emoji_stats(c.description, *ctx.ranking);
  return a;
}

std::vector<ChannelAnalytics> analyse_corpus(const Corpus& corpus, const AnalyticsContext& ctx, unsigned threads) {
  const auto& chans = corpus.channels();
  std::vector<ChannelAnalytics> out(chans.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<std::size_t>(1, chans.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t i; (i = next++) < chans.size();) {
      try {
        out[i] = analyse_channel(chans[i], ctx);
      } catch (...) {
        std::lock_guard lk(error_mu);
        if (!error) error = std::current_exception();
        next = chans.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

json to_json(const ChannelAnalytics& a) {
  auto pol = [](const PolarityScore& p) {
    return json{{"positive", p.positive}, {"negative", p.negative}, {"combined", p.combined()}};
  };
  return json{{"channel_id", a.channel_id},
              {"description_polarity", pol(a.description_polarity)},
              {"keywords_polarity", pol(a.keywords_polarity)},
              {"posts_polarity", {{"positive", a.posts_polarity.positive}, {"negative", a.posts_polarity.negative}}},
              {"description_emotions", to_json(a.description_emotions)},
              {"description_emojis", emoji_json(a.description_emojis)},
              {"posts_emojis", emoji_json(a.posts_emojis)}};
}

}  // namespace chanaudit
