#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace chanaudit {

using Date = std::chrono::year_month_day;

/// Parses "YYYY-MM-DD", also accepting a trailing time part ("T..." or " ...").
Date parse_date(std::string_view text);
std::string format_date(Date d);

// Annotation classes carried by ground-truth videos.
enum class VideoLabel { suitable, disturbing, restricted, irrelevant };

enum class StatusReason {
  available,
  private_content,
  account_terminated,
  terms_of_service,
  copyright,
  spam_deceptive,
  channel_absent,
  other_unavailable,
};

enum class ChannelClass { suitable = 0, disturbing = 1 };

std::string_view to_string(VideoLabel v);
std::string_view to_string(StatusReason r);
std::string_view to_string(ChannelClass c);
std::optional<VideoLabel> parse_video_label(std::string_view s);
std::optional<StatusReason> parse_status_reason(std::string_view s);
std::optional<ChannelClass> parse_channel_class(std::string_view s);

/// Availability of a video or channel page. `available` mirrors
/// `reason == StatusReason::available`; use the factories to keep them in sync.
struct StatusReport {
  bool available = true;
  StatusReason reason = StatusReason::available;
  std::optional<std::string> raw_message;

  static StatusReport ok() { return {}; }
  static StatusReport unavailable(StatusReason reason, std::optional<std::string> message = std::nullopt) {
    return StatusReport{reason == StatusReason::available, reason, std::move(message)};
  }

  bool operator==(const StatusReport&) const = default;
};

struct PostRecord {
  Date date_published{};
  std::string description;
  std::vector<std::string> tags;
  std::vector<std::string> hashtags;
  std::vector<std::string> external_links;
  std::vector<std::string> youtube_links;
  std::vector<std::string> channel_links;
  std::uint64_t like_count = 0;
  std::optional<std::string> thumbnail_video;

  bool operator==(const PostRecord&) const = default;
};

struct VideoRecord {
  std::string video_id;
  std::string channel_id;
  VideoLabel label = VideoLabel::suitable;
  std::optional<bool> made_for_kids;
  StatusReport status;
  // Optional per-video disturbing probability from an external video classifier.
  std::optional<double> content_score;

  bool operator==(const VideoRecord&) const = default;
};

struct LinkedPlatform {
  std::string name;
  std::string url;

  bool operator==(const LinkedPlatform&) const = default;
};

struct ChannelRecord {
  std::string channel_id;
  std::optional<Date> published_at;  // absent when the channel is gone
  std::optional<std::string> country;
  std::string description;
  std::vector<std::string> keywords;
  std::vector<std::string> topic_categories;
  std::optional<bool> made_for_kids;
  std::uint64_t view_count = 0;
  std::uint64_t video_count = 0;
  std::optional<std::uint64_t> subscriber_count;  // absent when hidden or not collected
  std::uint64_t subscription_count = 0;
  std::uint64_t post_count = 0;
  std::uint64_t links_count = 0;
  std::uint64_t description_char_count = 0;
  bool hidden_subscribers = false;
  std::vector<LinkedPlatform> linked_platforms;
  bool email_present = false;
  std::vector<PostRecord> posts;
  StatusReport status;
  std::vector<VideoRecord> videos;  // ground-truth videos published by this channel

  bool operator==(const ChannelRecord&) const = default;
};

struct ChannelLabel {
  ChannelClass value = ChannelClass::suitable;
  double disturbing_ratio = 0.0;
  std::size_t suitable_videos = 0;
  std::size_t disturbing_videos = 0;

  bool operator==(const ChannelLabel&) const = default;
};

/// Load/validation failure. `line()` is the 1-based input line, or 0 when the
/// problem is not tied to one line (e.g. a dangling reference across files).
class CorpusError : public std::runtime_error {
 public:
  CorpusError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Immutable collection of channels with their embedded ground-truth videos.
/// Construction validates record invariants and referential integrity.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<ChannelRecord> channels);

  const std::vector<ChannelRecord>& channels() const { return channels_; }
  std::size_t size() const { return channels_.size(); }
  bool empty() const { return channels_.empty(); }
  const ChannelRecord* find(std::string_view channel_id) const;
  std::size_t video_total() const;

  bool operator==(const Corpus& other) const { return channels_ == other.channels_; }

 private:
  std::vector<ChannelRecord> channels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Throws CorpusError when a record breaks an invariant (counts, hidden
/// subscriber rule, status consistency, URL syntax, video ownership).
void validate(const ChannelRecord& channel);

bool is_valid_url(std::string_view url);

constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const StatusReport& s);
nlohmann::json to_json(const PostRecord& p);
nlohmann::json to_json(const VideoRecord& v);
nlohmann::json to_json(const ChannelRecord& c);
StatusReport status_from_json(const nlohmann::json& j);
PostRecord post_from_json(const nlohmann::json& j);
VideoRecord video_from_json(const nlohmann::json& j, std::string_view owner);
ChannelRecord channel_from_json(const nlohmann::json& j);

enum class CorpusFormat { jsonl, csv_bundle };
std::optional<CorpusFormat> parse_corpus_format(std::string_view s);

Corpus read_jsonl(std::istream& in);
void write_jsonl(const Corpus& corpus, std::ostream& out);

/// Reads a directory holding channels.csv, videos.csv and optionally posts.csv.
Corpus read_csv_bundle(const std::filesystem::path& dir);

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct LabelPropagation {
  std::map<std::string, ChannelLabel> labels;
  std::vector<std::string> excluded;  // channels without suitable/disturbing videos
  std::vector<std::string> warnings;
};

/// Channel is disturbing iff at least one of its ground-truth videos is
/// disturbing; restricted/irrelevant videos are ignored.
LabelPropagation propagate_labels(const Corpus& corpus);
ChannelLabel label_from_videos(const std::vector<VideoRecord>& videos);

enum class BreakdownUnit { videos, channels };

struct StatusBreakdown {
  std::size_t total = 0;
  std::map<StatusReason, std::size_t> counts;
  double percent(StatusReason r) const;
  double removed_percent() const;
};

/// Frequency of status reasons over the videos (or channels) of one class.
/// Throws std::invalid_argument when the class has no members.
StatusBreakdown status_breakdown(const Corpus& corpus, ChannelClass cls,
                                 BreakdownUnit unit = BreakdownUnit::videos);

}  // namespace chanaudit
