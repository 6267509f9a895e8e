#include "chanaudit/corpus.hpp"

#include <charconv>
#include <regex>
#include <stdexcept>
#include <unordered_set>

#include "chanaudit/utf8.hpp"

namespace chanaudit {

Date parse_date(std::string_view text) {
  auto fail = [&] { return std::invalid_argument("invalid ISO-8601 date: '" + std::string(text) + "'"); };
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') throw fail();
  if (text.size() > 10 && text[10] != 'T' && text[10] != ' ') throw fail();
  int y = 0;
  unsigned m = 0, d = 0;
  auto parse = [&](std::string_view part, auto& out) {
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (ec != std::errc{} || p != part.data() + part.size()) throw fail();
  };
  parse(text.substr(0, 4), y);
  parse(text.substr(5, 2), m);
  parse(text.substr(8, 2), d);
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw fail();
  return date;
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

std::string_view to_string(VideoLabel v) {
  switch (v) {
    case VideoLabel::suitable: return "suitable";
    case VideoLabel::disturbing: return "disturbing";
    case VideoLabel::restricted: return "restricted";
    case VideoLabel::irrelevant: return "irrelevant";
  }
  return "?";
}

std::string_view to_string(StatusReason r) {
  switch (r) {
    case StatusReason::available: return "available";
    case StatusReason::private_content: return "private";
    case StatusReason::account_terminated: return "account_terminated";
    case StatusReason::terms_of_service: return "terms_of_service";
    case StatusReason::copyright: return "copyright";
    case StatusReason::spam_deceptive: return "spam_deceptive";
    case StatusReason::channel_absent: return "channel_absent";
    case StatusReason::other_unavailable: return "other_unavailable";
  }
  return "?";
}

std::string_view to_string(ChannelClass c) { return c == ChannelClass::disturbing ? "disturbing" : "suitable"; }

std::optional<VideoLabel> parse_video_label(std::string_view s) {
  for (auto v : {VideoLabel::suitable, VideoLabel::disturbing, VideoLabel::restricted, VideoLabel::irrelevant})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::optional<StatusReason> parse_status_reason(std::string_view s) {
  for (auto r : {StatusReason::available, StatusReason::private_content, StatusReason::account_terminated,
                 StatusReason::terms_of_service, StatusReason::copyright, StatusReason::spam_deceptive,
                 StatusReason::channel_absent, StatusReason::other_unavailable})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

std::optional<ChannelClass> parse_channel_class(std::string_view s) {
  if (s == "suitable" || s == "0") return ChannelClass::suitable;
  if (s == "disturbing" || s == "1") return ChannelClass::disturbing;
  return std::nullopt;
}

std::optional<CorpusFormat> parse_corpus_format(std::string_view s) {
  if (s == "jsonl") return CorpusFormat::jsonl;
  if (s == "csv" || s == "csv-bundle") return CorpusFormat::csv_bundle;
  return std::nullopt;
}

bool is_valid_url(std::string_view url) {
  static const std::regex re(R"(^[A-Za-z][A-Za-z0-9+.-]*://[^\s/?#]+[^\s]*$)");
  return std::regex_match(url.begin(), url.end(), re);
}

namespace {

void check_status(const StatusReport& s, const std::string& where) {
  if (s.available != (s.reason == StatusReason::available))
    throw CorpusError(0, where + ": status.available disagrees with status.reason");
}

void check_urls(const std::vector<std::string>& urls, const std::string& where) {
  for (const auto& u : urls)
    if (!is_valid_url(u)) throw CorpusError(0, where + ": invalid URL '" + u + "'");
}

}  // namespace

void validate(const ChannelRecord& c) {
  const std::string where = "channel " + c.channel_id;
  if (c.channel_id.empty()) throw CorpusError(0, "channel with empty channel_id");
  if (c.hidden_subscribers && c.subscriber_count && *c.subscriber_count != 0)
    throw CorpusError(0, where + ": subscriber_count present although subscribers are hidden");
  if (c.description_char_count != utf8::count_non_whitespace(c.description))
    throw CorpusError(0, where + ": description_char_count does not match description");
  check_status(c.status, where);
  for (const auto& lp : c.linked_platforms)
    if (!is_valid_url(lp.url)) throw CorpusError(0, where + ": invalid link URL '" + lp.url + "'");
  for (std::size_t i = 0; i < c.posts.size(); ++i) {
    const auto& p = c.posts[i];
    const std::string pw = where + " post " + std::to_string(i);
    check_urls(p.external_links, pw);
    check_urls(p.youtube_links, pw);
    check_urls(p.channel_links, pw);
  }
  for (const auto& v : c.videos) {
    if (v.video_id.empty()) throw CorpusError(0, where + ": video with empty video_id");
    check_status(v.status, "video " + v.video_id);
    if (v.content_score && !(*v.content_score >= 0.0 && *v.content_score <= 1.0))
      throw CorpusError(0, "video " + v.video_id + ": content_score outside [0,1]");
  }
}

Corpus::Corpus(std::vector<ChannelRecord> channels) : channels_(std::move(channels)) {
  std::unordered_set<std::string> video_ids;
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    const auto& c = channels_[i];
    validate(c);
    if (!index_.emplace(c.channel_id, i).second) throw CorpusError(0, "duplicate channel_id " + c.channel_id);
    for (const auto& v : c.videos)
      if (!video_ids.insert(v.video_id).second) throw CorpusError(0, "duplicate video_id " + v.video_id);
  }
  for (const auto& c : channels_)
    for (const auto& v : c.videos)
      if (!index_.contains(v.channel_id))
        throw CorpusError(0, "video " + v.video_id + " references unknown channel " + v.channel_id);
      else if (v.channel_id != c.channel_id)
        throw CorpusError(0, "video " + v.video_id + " belongs to " + v.channel_id + " but is listed under " +
                                 c.channel_id);
}

const ChannelRecord* Corpus::find(std::string_view channel_id) const {
  auto it = index_.find(std::string(channel_id));
  return it == index_.end() ? nullptr : &channels_[it->second];
}

std::size_t Corpus::video_total() const {
  std::size_t n = 0;
  for (const auto& c : channels_) n += c.videos.size();
  return n;
}

ChannelLabel label_from_videos(const std::vector<VideoRecord>& videos) {
  ChannelLabel label;
  for (const auto& v : videos) {
    if (v.label == VideoLabel::suitable) ++label.suitable_videos;
    if (v.label == VideoLabel::disturbing) ++label.disturbing_videos;
  }
  const auto total = label.suitable_videos + label.disturbing_videos;
  if (total == 0) return label;
  label.disturbing_ratio = static_cast<double>(label.disturbing_videos) / static_cast<double>(total);
  label.value = label.disturbing_videos > 0 ? ChannelClass::disturbing : ChannelClass::suitable;
  return label;
}

LabelPropagation propagate_labels(const Corpus& corpus) {
  LabelPropagation out;
  for (const auto& c : corpus.channels()) {
    auto label = label_from_videos(c.videos);
    if (label.suitable_videos + label.disturbing_videos == 0) {
      out.excluded.push_back(c.channel_id);
      out.warnings.push_back("channel " + c.channel_id +
                             " has no suitable or disturbing ground-truth video; excluded from labelling");
      continue;
    }
    out.labels.emplace(c.channel_id, label);
  }
  return out;
}

double StatusBreakdown::percent(StatusReason r) const {
  if (total == 0) return 0.0;
  auto it = counts.find(r);
  return it == counts.end() ? 0.0 : 100.0 * static_cast<double>(it->second) / static_cast<double>(total);
}

double StatusBreakdown::removed_percent() const { return total == 0 ? 0.0 : 100.0 - percent(StatusReason::available); }

StatusBreakdown status_breakdown(const Corpus& corpus, ChannelClass cls, BreakdownUnit unit) {
  StatusBreakdown out;
  if (unit == BreakdownUnit::videos) {
    const VideoLabel want = cls == ChannelClass::disturbing ? VideoLabel::disturbing : VideoLabel::suitable;
    for (const auto& c : corpus.channels())
      for (const auto& v : c.videos)
        if (v.label == want) {
          ++out.total;
          ++out.counts[v.status.reason];
        }
  } else {
    const auto prop = propagate_labels(corpus);
    for (const auto& c : corpus.channels()) {
      auto it = prop.labels.find(c.channel_id);
      if (it == prop.labels.end() || it->second.value != cls) continue;
      ++out.total;
      ++out.counts[c.status.reason];
    }
  }
  if (out.total == 0)
    throw std::invalid_argument("no " + std::string(to_string(cls)) +
                                (unit == BreakdownUnit::videos ? " videos" : " channels") + " in corpus");
  return out;
}

}  // namespace chanaudit
