#include <atomic>
#include <charconv>
#include <regex>
#include <set>
#include <thread>

#include "chanaudit/collector.hpp"
#include "chanaudit/utf8.hpp"

namespace chanaudit {

using nlohmann::json;

namespace {

RawPage get_with_retry(Client& client, const std::string& target, PageKind kind, int retries) {
  std::string last;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    try {
      auto page = client.get(target, kind);
      if (page.http_status < 500) return page;
      last = "HTTP " + std::to_string(page.http_status) + " for " + target;
    } catch (const TransportError& e) {
      last = e.what();
    }
  }
  throw TransportError(last + " (after " + std::to_string(retries + 1) + " attempts)");
}

// The API serialises counts as decimal strings.
std::optional<std::uint64_t> api_count(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer()) {
    auto v = it->get<std::int64_t>();
    if (v < 0) throw std::runtime_error(std::string("negative ") + key);
    return static_cast<std::uint64_t>(v);
  }
  if (it->is_string()) {
    const auto s = it->get<std::string>();
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw std::runtime_error(std::string("bad ") + key + " '" + s + "'");
    return v;
  }
  throw std::runtime_error(std::string("bad ") + key);
}

const json& child(const json& j, const char* key) {
  static const json empty = json::object();
  auto it = j.find(key);
  return it == j.end() || !it->is_object() ? empty : *it;
}

std::vector<std::string> split_keywords(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ' ' && !quoted) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

void parse_about(const std::string& html, ChannelRecord& rec) {
  static const std::regex link(R"re(<a\s[^>]*class="[^"]*\babout-link\b[^"]*"[^>]*>([^<]*)</a>)re", std::regex::icase);
  static const std::regex href(R"re(href="([^"]*)")re", std::regex::icase);
  static const std::regex email(R"re(View email address|mailto:|id="email")re", std::regex::icase);
  for (std::sregex_iterator it(html.begin(), html.end(), link), end; it != end; ++it) {
    const std::string tag = (*it)[0].str();
    std::smatch h;
    if (!std::regex_search(tag, h, href)) continue;
    auto url = html_unescape(h[1].str());
    if (!is_valid_url(url)) continue;
    const auto text = html_unescape((*it)[1].str());
    rec.linked_platforms.push_back({platform_for_url(url, text), url});
  }
  rec.links_count = rec.linked_platforms.size();
  rec.email_present = std::regex_search(html, email);
}

bool is_youtube_host(std::string_view url) {
  static const std::regex re(R"(^https?://((www|m)\.)?(youtube\.com|youtu\.be)([/?#]|$))", std::regex::icase);
  return std::regex_search(url.begin(), url.end(), re);
}

bool is_channel_path(std::string_view url) {
  static const std::regex re(R"(^https?://[^/]+/(channel/|c/|user/|@))", std::regex::icase);
  return std::regex_search(url.begin(), url.end(), re);
}

std::vector<std::string> urls_in(std::string_view text) {
  static const std::regex re(R"(https?://[^\s<>"']+)");
  std::vector<std::string> out;
  for (std::regex_iterator<std::string_view::const_iterator> it(text.begin(), text.end(), re), end; it != end; ++it) {
    auto u = it->str();
    while (!u.empty() && std::string_view(".,;:!?)").find(u.back()) != std::string_view::npos) u.pop_back();
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<std::string> hashtags_in(std::string_view text) {
  std::vector<std::string> out;
  const auto cps = utf8::decode(text);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i] != U'#' || (i > 0 && !utf8::is_whitespace(cps[i - 1]))) continue;
    std::size_t j = i + 1;
    while (j < cps.size() && !utf8::is_whitespace(cps[j]) && std::u32string_view(U",.!?;:#()[]\"'").find(cps[j]) ==
                                                                    std::u32string_view::npos)
      ++j;
    if (j > i + 1) out.push_back(utf8::encode(std::u32string_view(cps).substr(i, j - i)));
    i = j - 1;
  }
  return out;
}

std::vector<std::string> string_array(const json& j, const char* key) {
  std::vector<std::string> out;
  if (auto it = j.find(key); it != j.end() && it->is_array())
    for (const auto& v : *it)
      if (v.is_string()) out.push_back(v.get<std::string>());
  return out;
}

PostRecord post_from_page(const json& p) {
  PostRecord post;
  post.date_published = parse_date(p.at("datePublished").get<std::string>());
  post.description = p.value("contentText", "");
  post.tags = string_array(p, "tags");
  post.hashtags = p.contains("hashtags") ? string_array(p, "hashtags") : hashtags_in(post.description);
  auto links = p.contains("links") ? string_array(p, "links") : urls_in(post.description);
  for (auto& u : links) {
    if (!is_valid_url(u)) continue;
    if (!is_youtube_host(u))
      post.external_links.push_back(std::move(u));
    else if (is_channel_path(u))
      post.channel_links.push_back(std::move(u));
    else
      post.youtube_links.push_back(std::move(u));
  }
  post.like_count = api_count(p, "likeCount").value_or(0);
  if (auto it = p.find("thumbnailVideo"); it != p.end() && it->is_string()) post.thumbnail_video = it->get<std::string>();
  return post;
}

}  // namespace

ChannelRecord fetch_channel(Client& client, const std::string& channel_id, int retries) {
  ChannelRecord rec;
  rec.channel_id = channel_id;
  const auto api = get_with_retry(client, "/api/channels/" + channel_id, PageKind::api, retries);
  const auto about = get_with_retry(client, "/channel/" + channel_id, PageKind::html, retries);

  json item;
  if (api.http_status == 200) {
    auto doc = json::parse(api.body);
    if (auto it = doc.find("items"); it != doc.end() && it->is_array() && !it->empty()) item = it->front();
  }
  if (item.is_null()) {
    auto status = parse_status(about);
    if (status.available) status = StatusReport::unavailable(StatusReason::channel_absent);
    rec.status = std::move(status);
    return rec;
  }

  const auto& snippet = child(item, "snippet");
  const auto& stats = child(item, "statistics");
  if (auto it = snippet.find("publishedAt"); it != snippet.end() && it->is_string())
    rec.published_at = parse_date(it->get<std::string>());
  if (auto it = snippet.find("country"); it != snippet.end() && it->is_string()) rec.country = it->get<std::string>();
  rec.description = snippet.value("description", "");
  rec.description_char_count = utf8::count_non_whitespace(rec.description);
  rec.view_count = api_count(stats, "viewCount").value_or(0);
  rec.video_count = api_count(stats, "videoCount").value_or(0);
  rec.hidden_subscribers = stats.value("hiddenSubscriberCount", false);
  if (!rec.hidden_subscribers) rec.subscriber_count = api_count(stats, "subscriberCount");
  const auto& branding = child(child(item, "brandingSettings"), "channel");
  if (auto it = branding.find("keywords"); it != branding.end() && it->is_string())
    rec.keywords = split_keywords(it->get<std::string>());
  rec.topic_categories = string_array(child(item, "topicDetails"), "topicCategories");
  if (auto it = child(item, "status").find("madeForKids"); it != child(item, "status").end() && it->is_boolean())
    rec.made_for_kids = it->get<bool>();

  const auto subs = get_with_retry(client, "/api/channels/" + channel_id + "/subscriptions", PageKind::api, retries);
  if (subs.http_status == 200) {
    auto doc = json::parse(subs.body);
    rec.subscription_count = api_count(child(doc, "pageInfo"), "totalResults").value_or(0);
  }

  if (about.http_status == 200) parse_about(about.body, rec);
  rec.status = parse_status(about);
  return rec;
}

std::vector<PostRecord> fetch_posts(Client& client, const std::string& channel_id, std::size_t limit, int retries) {
  static const std::regex script(R"re(<script[^>]*id="community-data"[^>]*>)re");
  std::vector<PostRecord> posts;
  for (int page = 1; posts.size() < limit; ++page) {
    const auto raw = get_with_retry(client, "/channel/" + channel_id + "/community?page=" + std::to_string(page),
                                    PageKind::html, retries);
    if (raw.http_status != 200) break;
    std::smatch m;
    if (!std::regex_search(raw.body, m, script)) break;
    const auto begin = static_cast<std::size_t>(m.position(0) + m.length(0));
    const auto end = raw.body.find("</script>", begin);
    if (end == std::string::npos) throw std::runtime_error("unterminated community-data block for " + channel_id);
    const auto doc = json::parse(raw.body.substr(begin, end - begin));
    for (const auto& p : doc.value("posts", json::array())) {
      posts.push_back(post_from_page(p));
      if (posts.size() == limit) break;
    }
    if (!doc.contains("next_page") || doc.at("next_page").is_null()) break;
  }
  return posts;
}

StatusReport fetch_video_status(Client& client, const std::string& video_id, int retries) {
  return parse_status(get_with_retry(client, "/watch?v=" + video_id, PageKind::html, retries));
}

CrawlResult crawl(Client& client, const CrawlRequest& request, const FetchPolicy& policy) {
  policy.validate();
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& id : request.channel_ids)
    if (seen.insert(id).second) ids.push_back(id);

  std::map<std::string, std::vector<const VideoRecord*>> videos_of;
  for (const auto& v : request.videos) videos_of[v.channel_id].push_back(&v);

  std::vector<std::optional<ChannelRecord>> slots(ids.size());
  std::vector<std::string> errors(ids.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      try {
        auto rec = fetch_channel(client, ids[i], policy.retries);
        if (rec.status.available) {
          rec.posts = fetch_posts(client, ids[i], request.post_limit, policy.retries);
          rec.post_count = rec.posts.size();
        }
        if (auto it = videos_of.find(ids[i]); it != videos_of.end())
          for (const auto* v : it->second) {
            auto video = *v;
            video.status = fetch_video_status(client, v->video_id, policy.retries);
            rec.videos.push_back(std::move(video));
          }
        validate(rec);
        slots[i] = std::move(rec);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  const auto n = std::min<std::size_t>(static_cast<std::size_t>(policy.max_concurrent_requests), ids.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  CrawlResult result;
  std::vector<ChannelRecord> records;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (slots[i])
      records.push_back(std::move(*slots[i]));
    else
      result.failures.push_back({ids[i], errors[i]});
  }
  result.corpus = Corpus(std::move(records));
  return result;
}

}  // namespace chanaudit
