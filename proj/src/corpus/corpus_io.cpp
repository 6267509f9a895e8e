#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "chanaudit/corpus.hpp"
#include "chanaudit/csv.hpp"
#include "chanaudit/utf8.hpp"

namespace chanaudit {

using nlohmann::json;

namespace {

json opt(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<bool>& v) { return v ? json(*v) : json(nullptr); }

std::uint64_t count_field(const json& j, const char* key, bool required = true) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw std::invalid_argument(std::string("missing count '") + key + "'");
    return 0;
  }
  if (!it->is_number_integer()) throw std::invalid_argument(std::string("'") + key + "' must be an integer");
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  const auto v = it->get<std::int64_t>();
  if (v < 0) throw std::invalid_argument(std::string("'") + key + "' must be non-negative, got " + std::to_string(v));
  return static_cast<std::uint64_t>(v);
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

std::optional<bool> opt_bool(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<bool>();
}

std::vector<std::string> string_list(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  return it->get<std::vector<std::string>>();
}

}  // namespace

json to_json(const StatusReport& s) {
  return json{{"available", s.available}, {"reason", to_string(s.reason)}, {"raw_message", opt(s.raw_message)}};
}

StatusReport status_from_json(const json& j) {
  StatusReport s;
  const auto reason = j.at("reason").get<std::string>();
  auto r = parse_status_reason(reason);
  if (!r) throw std::invalid_argument("unknown status reason '" + reason + "'");
  s.reason = *r;
  s.available = j.contains("available") ? j.at("available").get<bool>() : *r == StatusReason::available;
  s.raw_message = opt_string(j, "raw_message");
  return s;
}

json to_json(const PostRecord& p) {
  return json{{"date_published", format_date(p.date_published)},
              {"description", p.description},
              {"tags", p.tags},
              {"hashtags", p.hashtags},
              {"external_links", p.external_links},
              {"youtube_links", p.youtube_links},
              {"channel_links", p.channel_links},
              {"like_count", p.like_count},
              {"thumbnail_video", opt(p.thumbnail_video)}};
}

PostRecord post_from_json(const json& j) {
  PostRecord p;
  p.date_published = parse_date(j.at("date_published").get<std::string>());
  p.description = j.value("description", "");
  p.tags = string_list(j, "tags");
  p.hashtags = string_list(j, "hashtags");
  p.external_links = string_list(j, "external_links");
  p.youtube_links = string_list(j, "youtube_links");
  p.channel_links = string_list(j, "channel_links");
  p.like_count = count_field(j, "like_count", false);
  p.thumbnail_video = opt_string(j, "thumbnail_video");
  return p;
}

json to_json(const VideoRecord& v) {
  return json{{"video_id", v.video_id},
              {"channel_id", v.channel_id},
              {"label", to_string(v.label)},
              {"made_for_kids", opt(v.made_for_kids)},
              {"status", to_json(v.status)},
              {"content_score", v.content_score ? json(*v.content_score) : json(nullptr)}};
}

VideoRecord video_from_json(const json& j, std::string_view owner) {
  VideoRecord v;
  v.video_id = j.at("video_id").get<std::string>();
  v.channel_id = j.contains("channel_id") && !j.at("channel_id").is_null() ? j.at("channel_id").get<std::string>()
                                                                             : std::string(owner);
  const auto label = j.at("label").get<std::string>();
  auto l = parse_video_label(label);
  if (!l) throw std::invalid_argument("unknown video label '" + label + "'");
  v.label = *l;
  v.made_for_kids = opt_bool(j, "made_for_kids");
  v.status = j.contains("status") ? status_from_json(j.at("status")) : StatusReport::ok();
  if (j.contains("content_score") && !j.at("content_score").is_null())
    v.content_score = j.at("content_score").get<double>();
  return v;
}

json to_json(const ChannelRecord& c) {
  json platforms = json::array();
  for (const auto& lp : c.linked_platforms) platforms.push_back({{"name", lp.name}, {"url", lp.url}});
  json posts = json::array();
  for (const auto& p : c.posts) posts.push_back(to_json(p));
  json videos = json::array();
  for (const auto& v : c.videos) videos.push_back(to_json(v));
  return json{{"schema_version", kSchemaVersion},
              {"channel_id", c.channel_id},
              {"published_at", c.published_at ? json(format_date(*c.published_at)) : json(nullptr)},
              {"country", opt(c.country)},
              {"description", c.description},
              {"description_char_count", c.description_char_count},
              {"keywords", c.keywords},
              {"topic_categories", c.topic_categories},
              {"made_for_kids", opt(c.made_for_kids)},
              {"view_count", c.view_count},
              {"video_count", c.video_count},
              {"subscriber_count", c.subscriber_count ? json(*c.subscriber_count) : json(nullptr)},
              {"hidden_subscribers", c.hidden_subscribers},
              {"subscription_count", c.subscription_count},
              {"post_count", c.post_count},
              {"links_count", c.links_count},
              {"linked_platforms", platforms},
              {"email_present", c.email_present},
              {"status", to_json(c.status)},
              {"posts", posts},
              {"videos", videos}};
}

ChannelRecord channel_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("channel record must be a JSON object");
  const int version = j.value("schema_version", 0);
  if (version != kSchemaVersion)
    throw std::invalid_argument("unsupported schema_version " + std::to_string(version) + " (expected " +
                                std::to_string(kSchemaVersion) + ")");
  ChannelRecord c;
  c.channel_id = j.at("channel_id").get<std::string>();
  if (auto d = opt_string(j, "published_at")) c.published_at = parse_date(*d);
  c.country = opt_string(j, "country");
  c.description = j.value("description", "");
  c.description_char_count = j.contains("description_char_count")
                                 ? count_field(j, "description_char_count")
                                 : utf8::count_non_whitespace(c.description);
  c.keywords = string_list(j, "keywords");
  c.topic_categories = string_list(j, "topic_categories");
  c.made_for_kids = opt_bool(j, "made_for_kids");
  c.view_count = count_field(j, "view_count");
  c.video_count = count_field(j, "video_count");
  if (j.contains("subscriber_count") && !j.at("subscriber_count").is_null())
    c.subscriber_count = count_field(j, "subscriber_count");
  c.hidden_subscribers = j.value("hidden_subscribers", false);
  c.subscription_count = count_field(j, "subscription_count", false);
  c.post_count = count_field(j, "post_count", false);
  if (j.contains("linked_platforms"))
    for (const auto& lp : j.at("linked_platforms"))
      c.linked_platforms.push_back({lp.at("name").get<std::string>(), lp.at("url").get<std::string>()});
  c.links_count = j.contains("links_count") ? count_field(j, "links_count") : c.linked_platforms.size();
  c.email_present = j.value("email_present", false);
  c.status = j.contains("status") ? status_from_json(j.at("status")) : StatusReport::ok();
  if (j.contains("posts"))
    for (const auto& p : j.at("posts")) c.posts.push_back(post_from_json(p));
  if (j.contains("videos"))
    for (const auto& v : j.at("videos")) c.videos.push_back(video_from_json(v, c.channel_id));
  return c;
}

Corpus read_jsonl(std::istream& in) {
  std::vector<ChannelRecord> channels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto rec = channel_from_json(json::parse(line));
      validate(rec);
      channels.push_back(std::move(rec));
    } catch (const CorpusError& e) {
      throw CorpusError(lineno, e.what());
    } catch (const std::exception& e) {
      throw CorpusError(lineno, e.what());
    }
  }
  return Corpus(std::move(channels));
}

void write_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& c : corpus.channels()) out << to_json(c).dump() << '\n';
}

namespace {

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find('|', start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<bool> parse_tristate(std::string_view s, std::size_t line) {
  if (s.empty() || s == "null" || s == "NA") return std::nullopt;
  if (s == "true" || s == "1" || s == "True") return true;
  if (s == "false" || s == "0" || s == "False") return false;
  throw CorpusError(line, "expected boolean, got '" + std::string(s) + "'");
}

std::uint64_t parse_count(std::string_view s, std::size_t line, std::string_view column) {
  if (s.empty()) return 0;
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw CorpusError(line, std::string(column) + ": expected integer, got '" + std::string(s) + "'");
  if (v < 0) throw CorpusError(line, std::string(column) + " must be non-negative");
  return static_cast<std::uint64_t>(v);
}

StatusReport parse_csv_status(std::string_view reason, std::string_view message, std::size_t line) {
  if (reason.empty()) return StatusReport::ok();
  auto r = parse_status_reason(reason);
  if (!r) throw CorpusError(line, "unknown status reason '" + std::string(reason) + "'");
  std::optional<std::string> msg;
  if (!message.empty()) msg = std::string(message);
  return StatusReport::unavailable(*r, std::move(msg));
}

csv::Table read_table(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw CorpusError(0, "cannot open " + p.string());
  try {
    return csv::Table::read(in);
  } catch (const csv::ParseError& e) {
    throw CorpusError(e.line(), p.filename().string() + ": " + e.what());
  }
}

}  // namespace

Corpus read_csv_bundle(const std::filesystem::path& dir) {
  const auto channels_csv = read_table(dir / "channels.csv");
  const auto videos_csv = read_table(dir / "videos.csv");

  std::vector<ChannelRecord> channels;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& row : channels_csv.rows()) {
    const auto& t = channels_csv;
    try {
      ChannelRecord c;
      c.channel_id = std::string(t.require(row, "channel_id"));
      if (auto d = t.get(row, "published_at"); !d.empty()) c.published_at = parse_date(d);
      if (auto v = t.get(row, "country"); !v.empty() && v != "N/A") c.country = std::string(v);
      c.description = std::string(t.get(row, "description"));
      c.description_char_count = utf8::count_non_whitespace(c.description);
      c.keywords = split_list(t.get(row, "keywords"));
      c.topic_categories = split_list(t.get(row, "topic_categories"));
      c.made_for_kids = parse_tristate(t.get(row, "made_for_kids"), row.line);
      c.view_count = parse_count(t.get(row, "view_count"), row.line, "view_count");
      c.video_count = parse_count(t.get(row, "video_count"), row.line, "video_count");
      c.hidden_subscribers = parse_tristate(t.get(row, "hidden_subscribers"), row.line).value_or(false);
      if (auto v = t.get(row, "subscriber_count"); !v.empty() && !c.hidden_subscribers)
        c.subscriber_count = parse_count(v, row.line, "subscriber_count");
      c.subscription_count = parse_count(t.get(row, "subscription_count"), row.line, "subscription_count");
      c.post_count = parse_count(t.get(row, "post_count"), row.line, "post_count");
      for (const auto& item : split_list(t.get(row, "linked_platforms"))) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw CorpusError(row.line, "linked_platforms entry must be name=url");
        c.linked_platforms.push_back({item.substr(0, eq), item.substr(eq + 1)});
      }
      c.links_count = t.has("links_count") ? parse_count(t.get(row, "links_count"), row.line, "links_count")
                                           : c.linked_platforms.size();
      c.email_present = parse_tristate(t.get(row, "email_present"), row.line).value_or(false);
      c.status = parse_csv_status(t.get(row, "status_reason"), t.get(row, "status_message"), row.line);
      validate(c);
      index.emplace(c.channel_id, channels.size());
      channels.push_back(std::move(c));
    } catch (const CorpusError& e) {
      if (e.line()) throw;
      throw CorpusError(row.line, std::string("channels.csv: ") + e.what());
    } catch (const std::exception& e) {
      throw CorpusError(row.line, std::string("channels.csv: ") + e.what());
    }
  }

  for (const auto& row : videos_csv.rows()) {
    const auto& t = videos_csv;
    VideoRecord v;
    try {
      v.video_id = std::string(t.require(row, "video_id"));
      v.channel_id = std::string(t.require(row, "channel_id"));
      auto label = parse_video_label(t.require(row, "label"));
      if (!label) throw CorpusError(row.line, "unknown label '" + std::string(t.get(row, "label")) + "'");
      v.label = *label;
      v.made_for_kids = parse_tristate(t.get(row, "made_for_kids"), row.line);
      v.status = parse_csv_status(t.get(row, "status_reason"), t.get(row, "status_message"), row.line);
      if (auto s = t.get(row, "content_score"); !s.empty()) v.content_score = std::stod(std::string(s));
    } catch (const CorpusError&) {
      throw;
    } catch (const std::exception& e) {
      throw CorpusError(row.line, std::string("videos.csv: ") + e.what());
    }
    auto it = index.find(v.channel_id);
    if (it == index.end())
      throw CorpusError(row.line, "videos.csv: video " + v.video_id + " references unknown channel " + v.channel_id);
    channels[it->second].videos.push_back(std::move(v));
  }

  if (std::filesystem::exists(dir / "posts.csv")) {
    const auto posts_csv = read_table(dir / "posts.csv");
    const auto& t = posts_csv;
    for (const auto& row : t.rows()) {
      PostRecord p;
      std::string cid;
      try {
        cid = std::string(t.require(row, "channel_id"));
        p.date_published = parse_date(t.require(row, "date_published"));
        p.description = std::string(t.get(row, "description"));
        p.tags = split_list(t.get(row, "tags"));
        p.hashtags = split_list(t.get(row, "hashtags"));
        p.external_links = split_list(t.get(row, "external_links"));
        p.youtube_links = split_list(t.get(row, "youtube_links"));
        p.channel_links = split_list(t.get(row, "channel_links"));
        p.like_count = parse_count(t.get(row, "like_count"), row.line, "like_count");
        if (auto tv = t.get(row, "thumbnail_video"); !tv.empty()) p.thumbnail_video = std::string(tv);
      } catch (const CorpusError&) {
        throw;
      } catch (const std::exception& e) {
        throw CorpusError(row.line, std::string("posts.csv: ") + e.what());
      }
      auto it = index.find(cid);
      if (it == index.end()) throw CorpusError(row.line, "posts.csv: post references unknown channel " + cid);
      channels[it->second].posts.push_back(std::move(p));
    }
  }
  return Corpus(std::move(channels));
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  if (!std::filesystem::exists(path)) throw CorpusError(0, "no such file or directory: " + path.string());
  if (format == CorpusFormat::csv_bundle) return read_csv_bundle(path);
  std::ifstream in(path);
  if (!in) throw CorpusError(0, "cannot open " + path.string());
  return read_jsonl(in);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_jsonl(corpus, out);
}

}  // namespace chanaudit
