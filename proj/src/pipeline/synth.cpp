#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "chanaudit/pipeline.hpp"
#include "chanaudit/utf8.hpp"

namespace chanaudit {

namespace {

const std::vector<std::string> kSharedKeywords = {"kids", "cartoon", "fun videos", "toys", "family"};
const std::vector<std::string> kDisturbingKeywords = {"prank", "challenge", "scary", "monster"};
const std::vector<std::string> kSuitableKeywords = {"nursery rhymes", "abc", "learning", "songs"};

const std::vector<std::string> kNegativeWords = {"scary", "kill", "dead", "evil", "terrible", "horrible", "angry",
                                                 "scream", "fear", "death", "afraid"};
const std::vector<std::string> kPositiveWords = {"fun", "happy", "love", "great", "wonderful", "friendly", "cute",
                                                 "joy", "smile", "beautiful", "awesome", "nice"};
const std::vector<std::string> kFiller = {"Welcome to our channel.", "New videos every week.", "Subscribe for more.",
                                          "We make videos for children.", "Thanks for watching.",
                                          "Stories, songs and games."};

const std::vector<std::pair<std::string, std::string>> kPlatforms = {{"Facebook", "https://www.facebook.com/"},
                                                                     {"Instagram", "https://www.instagram.com/"},
                                                                     {"Twitter", "https://twitter.com/"},
                                                                     {"TikTok", "https://www.tiktok.com/@"}};
const std::vector<std::string> kTopics = {"https://en.wikipedia.org/wiki/Entertainment",
                                          "https://en.wikipedia.org/wiki/Hobby", "https://en.wikipedia.org/wiki/Music",
                                          "https://en.wikipedia.org/wiki/Video_game_culture",
                                          "https://en.wikipedia.org/wiki/Lifestyle_(sociology)"};

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::uint64_t lognormal_count(double mu, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(mu, sigma);
  return static_cast<std::uint64_t>(std::llround(std::exp(nd(rng))));
}

}  // namespace

Corpus synth_corpus(const SynthOptions& o) {
  if (o.channels < 2) throw std::invalid_argument("synthetic corpus needs at least two channels");
  if (!(o.disturbing_fraction > 0 && o.disturbing_fraction < 1))
    throw std::invalid_argument("disturbing fraction must lie in (0, 1)");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(0, 1);
  const auto n_dist = std::max<std::size_t>(
      1, std::min(o.channels - 1, static_cast<std::size_t>(std::llround(o.disturbing_fraction * double(o.channels)))));
  std::vector<int> cls(o.channels, 0);
  std::fill(cls.begin(), cls.begin() + static_cast<long>(n_dist), 1);
  std::shuffle(cls.begin(), cls.end(), rng);

  std::vector<ChannelRecord> out;
  for (std::size_t i = 0; i < o.channels; ++i) {
    const int y = cls[i];
    char id[32];
    std::snprintf(id, sizeof id, "UCsyn%06zu", i);
    ChannelRecord c;
    c.channel_id = id;
    c.published_at = Date{std::chrono::year{2008 + static_cast<int>(rng() % 13)},
                          std::chrono::month{1 + static_cast<unsigned>(rng() % 12)},
                          std::chrono::day{1 + static_cast<unsigned>(rng() % 28)}};

    const auto& own = y ? kDisturbingKeywords : kSuitableKeywords;
    const auto& other = y ? kSuitableKeywords : kDisturbingKeywords;
    for (const auto& k : kSharedKeywords)
      if (u(rng) < 0.4) c.keywords.push_back(k);
    for (const auto& k : own)
      if (u(rng) < o.keyword_bias) c.keywords.push_back(k);
    for (const auto& k : other)
      if (u(rng) < 0.1) c.keywords.push_back(k);

    const auto& tone = y ? kNegativeWords : kPositiveWords;
    const auto& off_tone = y ? kPositiveWords : kNegativeWords;
    std::string desc = pick(kFiller, rng);
    for (int s = 0; s < 3; ++s) {
      const double r = u(rng);
      if (r < o.wording_bias)
        desc += " So " + pick(tone, rng) + "!";
      else if (r < o.wording_bias + 0.15)
        desc += " So " + pick(off_tone, rng) + "!";
      if (u(rng) < 0.5) desc += " " + pick(kFiller, rng);
    }
    c.description = desc;
    c.description_char_count = utf8::count_non_whitespace(desc);

    const double shift = o.mode == SignalMode::full ? o.count_shift * y : 0.0;
    c.video_count = 1 + lognormal_count(3.5 + shift, 1.0, rng);
    c.view_count = c.video_count * lognormal_count(6.0 + shift, 1.5, rng);
    if (u(rng) < 0.1) {
      c.hidden_subscribers = true;
    } else {
      c.subscriber_count = lognormal_count(5.0 + shift, 1.5, rng);
    }
    c.subscription_count = lognormal_count(1.0, 1.0, rng);

    const int posts = static_cast<int>(rng() % (o.mode == SignalMode::full && y ? 6 : 4));
    for (int p = 0; p < posts; ++p) {
      PostRecord post;
      post.date_published = Date{std::chrono::year{2021}, std::chrono::month{1 + static_cast<unsigned>(p)},
                                 std::chrono::day{1 + static_cast<unsigned>(rng() % 28)}};
      post.description = pick(kFiller, rng);
      post.like_count = rng() % 500;
      c.posts.push_back(std::move(post));
    }
    c.post_count = c.posts.size();

    for (const auto& [name, base] : kPlatforms)
      if (u(rng) < 0.3) c.linked_platforms.push_back({name, base + c.channel_id});
    c.links_count = c.linked_platforms.size();
    for (const auto& t : kTopics)
      if (u(rng) < 0.3) c.topic_categories.push_back(t);
    if (u(rng) < 0.95) c.made_for_kids = u(rng) < 0.5;

    const int nv = 1 + static_cast<int>(rng() % 3);
    const int bad = y ? 1 + static_cast<int>(rng() % static_cast<unsigned>(nv)) : 0;
    for (int v = 0; v < nv; ++v) {
      VideoRecord vr;
      vr.video_id = c.channel_id + "_v" + std::to_string(v);
      vr.channel_id = c.channel_id;
      vr.label = v < bad ? VideoLabel::disturbing : VideoLabel::suitable;
      vr.made_for_kids = u(rng) < 0.5;
      c.videos.push_back(std::move(vr));
    }
    out.push_back(std::move(c));
  }
  return Corpus(std::move(out));
}

}  // namespace chanaudit
