#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <shared_mutex>
#include <sstream>

#include <httplib.h>

#include "chanaudit/collector.hpp"

namespace chanaudit {

using nlohmann::json;

struct MockServer::Impl {
  httplib::Server svr;
  std::thread listener;
  int port = 0;
  Clock::time_point t0 = Clock::now();

  mutable std::shared_mutex routes_mu;
  std::map<std::string, Response> routes;
  std::set<std::string> failing;

  mutable std::mutex log_mu;
  std::vector<LogEntry> log;

  double since_start() const {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  }
};

namespace {

std::string target_of(const httplib::Request& req) {
  std::string target = req.path;
  char sep = '?';
  for (const auto& [k, v] : req.params) {
    target += sep + k + "=" + v;
    sep = '&';
  }
  return target;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string canonical_message(StatusReason r) {
  switch (r) {
    case StatusReason::private_content: return "This video is private.";
    case StatusReason::account_terminated: return "This video is no longer available because the YouTube account associated with this video has been terminated.";
    case StatusReason::terms_of_service: return "This video has been removed for violating YouTube's Terms of Service.";
    case StatusReason::copyright: return "This video is no longer available due to a copyright claim by a third party.";
    case StatusReason::spam_deceptive: return "This account has been terminated for a violation of YouTube's policy on spam, deceptive practices, and misleading content.";
    case StatusReason::channel_absent: return "This channel does not exist.";
    case StatusReason::other_unavailable: return "Video unavailable";
    case StatusReason::available: return "";
  }
  return "";
}

std::string error_page(const StatusReport& status) {
  const auto msg = status.raw_message.value_or(canonical_message(status.reason));
  return "<html><body><div id=\"player-unavailable\"><div class=\"yt-alert-message\">" + html_escape(msg) +
         "</div></div></body></html>";
}

}  // namespace

MockServer::MockServer() : impl_(std::make_unique<Impl>()) {
  impl_->svr.Get("/_log", [this](const httplib::Request&, httplib::Response& res) {
    json arr = json::array();
    for (const auto& e : log()) arr.push_back({{"target", e.target}, {"start_ms", e.start_ms}, {"end_ms", e.end_ms}});
    res.set_content(arr.dump(), "application/json");
  });
  impl_->svr.Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
    LogEntry entry;
    entry.target = target_of(req);
    entry.start_ms = impl_->since_start();
    if (auto ms = latency_ms_.load(); ms > 0) std::this_thread::sleep_for(Millis{ms});
    {
      std::shared_lock lk(impl_->routes_mu);
      if (impl_->failing.contains(entry.target)) {
        res.status = 500;
        res.set_content("internal error", "text/plain");
      } else if (auto it = impl_->routes.find(entry.target); it != impl_->routes.end()) {
        res.status = it->second.status;
        res.set_content(it->second.body, it->second.content_type);
      } else {
        res.status = 404;
        res.set_content("<html><body>404 Not Found</body></html>", "text/html; charset=utf-8");
      }
    }
    entry.end_ms = impl_->since_start();
    std::lock_guard lk(impl_->log_mu);
    impl_->log.push_back(std::move(entry));
  });
}

MockServer::~MockServer() { stop(); }

void MockServer::add(const std::string& target, Response response) {
  std::unique_lock lk(impl_->routes_mu);
  impl_->routes[target] = std::move(response);
}

void MockServer::fail(const std::string& target) {
  std::unique_lock lk(impl_->routes_mu);
  impl_->failing.insert(target);
}

void MockServer::add_directory(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw std::invalid_argument("fixture directory not found: " + root.string());
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    auto rel = fs::relative(entry.path(), root).generic_string();
    int status = 200;
    if (rel.ends_with(".404.html")) {
      status = 404;
      rel = rel.substr(0, rel.size() - 9) + (rel.starts_with("api/") ? ".json" : ".html");
    }
    std::string target;
    std::string content_type = "text/html; charset=utf-8";
    if (rel.starts_with("api/") && rel.ends_with(".json")) {
      target = "/" + rel.substr(0, rel.size() - 5);
      if (!target.ends_with("/subscriptions") && std::count(target.begin(), target.end(), '/') != 3) continue;
      content_type = "application/json";
    } else if (rel.starts_with("channel/") && rel.ends_with(".html")) {
      auto stem = rel.substr(0, rel.size() - 5);
      auto pos = stem.rfind("/community_");
      if (pos != std::string::npos)
        target = "/" + stem.substr(0, pos) + "/community?page=" + stem.substr(pos + 11);
      else
        target = "/" + stem;
    } else if (rel.starts_with("watch/") && rel.ends_with(".html")) {
      target = "/watch?v=" + rel.substr(6, rel.size() - 11);
    } else {
      continue;
    }
    add(target, {status, read_file(entry.path()), content_type});
  }
}

int MockServer::start(int port) {
  if (impl_->listener.joinable()) throw std::logic_error("mock server already running");
  if (port == 0) {
    impl_->port = impl_->svr.bind_to_any_port("127.0.0.1");
  } else {
    if (!impl_->svr.bind_to_port("127.0.0.1", port)) throw std::runtime_error("cannot bind port " + std::to_string(port));
    impl_->port = port;
  }
  if (impl_->port <= 0) throw std::runtime_error("cannot bind mock server");
  impl_->t0 = Clock::now();
  impl_->listener = std::thread([this] { impl_->svr.listen_after_bind(); });
  impl_->svr.wait_until_ready();
  return impl_->port;
}

void MockServer::stop() {
  impl_->svr.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
}

void MockServer::wait() {
  if (impl_->listener.joinable()) impl_->listener.join();
}

std::string MockServer::endpoint() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

std::vector<MockServer::LogEntry> MockServer::log() const {
  std::lock_guard lk(impl_->log_mu);
  return impl_->log;
}

void MockServer::clear_log() {
  std::lock_guard lk(impl_->log_mu);
  impl_->log.clear();
}

void add_channel_routes(MockServer& server, const ChannelRecord& rec, std::size_t posts_per_page) {
  const std::string& id = rec.channel_id;
  for (const auto& v : rec.videos) {
    if (v.status.available)
      server.add("/watch?v=" + v.video_id, {200, "<html><body><div id=\"player\">" + html_escape(v.video_id) +
                                                    "</div></body></html>"});
    else
      server.add("/watch?v=" + v.video_id, {200, error_page(v.status)});
  }

  if (!rec.status.available) {
    server.add("/api/channels/" + id, {200, R"({"kind":"youtube#channelListResponse","items":[]})", "application/json"});
    server.add("/channel/" + id, {404, error_page(rec.status)});
    return;
  }

  json snippet = {{"title", id}, {"description", rec.description}};
  if (rec.published_at) snippet["publishedAt"] = format_date(*rec.published_at) + "T00:00:00Z";
  if (rec.country) snippet["country"] = *rec.country;
  json stats = {{"viewCount", std::to_string(rec.view_count)},
                {"videoCount", std::to_string(rec.video_count)},
                {"hiddenSubscriberCount", rec.hidden_subscribers}};
  if (rec.subscriber_count && !rec.hidden_subscribers) stats["subscriberCount"] = std::to_string(*rec.subscriber_count);
  std::string keywords;
  for (const auto& k : rec.keywords) {
    if (!keywords.empty()) keywords += ' ';
    keywords += k.find(' ') == std::string::npos ? k : "\"" + k + "\"";
  }
  json item = {{"kind", "youtube#channel"},
               {"id", id},
               {"snippet", snippet},
               {"statistics", stats},
               {"brandingSettings", {{"channel", {{"keywords", keywords}}}}},
               {"topicDetails", {{"topicCategories", rec.topic_categories}}}};
  if (rec.made_for_kids) item["status"] = {{"madeForKids", *rec.made_for_kids}};
  server.add("/api/channels/" + id,
             {200, json{{"kind", "youtube#channelListResponse"}, {"items", json::array({item})}}.dump(),
              "application/json"});
  server.add("/api/channels/" + id + "/subscriptions",
             {200, json{{"pageInfo", {{"totalResults", rec.subscription_count}}}}.dump(), "application/json"});

  std::string about = "<html><body><div id=\"about\"><div id=\"description\">" + html_escape(rec.description) +
                      "</div><div id=\"links\">";
  for (const auto& lp : rec.linked_platforms)
    about += "<a class=\"about-link\" href=\"" + html_escape(lp.url) + "\">" + html_escape(lp.name) + "</a>";
  about += "</div>";
  if (rec.email_present) about += "<button id=\"email\">View email address</button>";
  about += "</div></body></html>";
  server.add("/channel/" + id, {200, about});

  if (rec.posts.empty() || posts_per_page == 0) return;
  const std::size_t pages = (rec.posts.size() + posts_per_page - 1) / posts_per_page;
  for (std::size_t page = 0; page < pages; ++page) {
    json posts = json::array();
    for (std::size_t i = page * posts_per_page; i < std::min(rec.posts.size(), (page + 1) * posts_per_page); ++i) {
      const auto& p = rec.posts[i];
      std::vector<std::string> links = p.external_links;
      links.insert(links.end(), p.youtube_links.begin(), p.youtube_links.end());
      links.insert(links.end(), p.channel_links.begin(), p.channel_links.end());
      json post = {{"datePublished", format_date(p.date_published)},
                   {"contentText", p.description},
                   {"tags", p.tags},
                   {"hashtags", p.hashtags},
                   {"links", links},
                   {"likeCount", std::to_string(p.like_count)}};
      if (p.thumbnail_video) post["thumbnailVideo"] = *p.thumbnail_video;
      posts.push_back(std::move(post));
    }
    json doc = {{"posts", posts}, {"next_page", page + 1 < pages ? json(page + 2) : json(nullptr)}};
    auto body = doc.dump();
    // Escape "</" inside the data block.
    for (std::size_t pos = 0; (pos = body.find("</", pos)) != std::string::npos; pos += 3) body.replace(pos, 2, "<\\/");
    server.add("/channel/" + id + "/community?page=" + std::to_string(page + 1),
               {200, "<html><body><div id=\"community\"></div><script id=\"community-data\" type=\"application/json\">" +
                         body + "</script></body></html>"});
  }
}

PolitenessReport analyse_log(std::vector<MockServer::LogEntry> log) {
  PolitenessReport r;
  r.requests = log.size();
  if (log.empty()) return r;
  std::sort(log.begin(), log.end(), [](const auto& a, const auto& b) { return a.start_ms < b.start_ms; });
  r.min_gap_ms = log.size() > 1 ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t i = 1; i < log.size(); ++i) r.min_gap_ms = std::min(r.min_gap_ms, log[i].start_ms - log[i - 1].start_ms);
  std::vector<std::pair<double, int>> events;
  for (const auto& e : log) {
    events.emplace_back(e.start_ms, +1);
    events.emplace_back(e.end_ms, -1);
  }
  // Ends sort before starts at equal timestamps.
  std::sort(events.begin(), events.end());
  int cur = 0;
  for (const auto& [t, d] : events) {
    cur += d;
    r.max_concurrency = std::max(r.max_concurrency, cur);
  }
  return r;
}

}  // namespace chanaudit
