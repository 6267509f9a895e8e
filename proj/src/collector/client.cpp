#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "chanaudit/collector.hpp"
#include "chanaudit/utf8.hpp"

namespace chanaudit {

namespace {

struct EndpointParts {
  std::string scheme;
  std::string host;
  std::string port;
};

std::optional<EndpointParts> split_endpoint(std::string_view endpoint) {
  static const std::regex re(R"(^(https?)://(\[[0-9A-Fa-f:.]+\]|[^/:\s]+)(?::(\d+))?/?$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(endpoint.begin(), endpoint.end(), m, re)) return std::nullopt;
  return EndpointParts{m[1].str(), utf8::ascii_lower(m[2].str()), m[3].str()};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool safe_segment(std::string_view s) {
  if (s.empty() || s == "." || s == "..") return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
  return true;
}

}  // namespace

bool HttpClient::is_local_endpoint(std::string_view endpoint) {
  auto parts = split_endpoint(endpoint);
  if (!parts) return false;
  const auto& h = parts->host;
  return h == "localhost" || h == "[::1]" || h.rfind("127.", 0) == 0;
}

HttpClient::HttpClient(std::string endpoint, std::shared_ptr<RateLimiter> limiter, bool allow_remote, Millis timeout)
    : endpoint_(std::move(endpoint)), limiter_(std::move(limiter)), timeout_(timeout) {
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
  auto parts = split_endpoint(endpoint_);
  if (!parts) throw std::invalid_argument("malformed endpoint '" + endpoint_ + "'");
  if (!allow_remote && !is_local_endpoint(endpoint_))
    throw std::invalid_argument("refusing non-localhost endpoint " + endpoint_ +
                                " without --i-understand-tos; crawl fixtures or the mock server instead");
  if (!limiter_) throw std::invalid_argument("HttpClient needs a rate limiter");
  host_ = parts->host + (parts->port.empty() ? "" : ":" + parts->port);
}

RawPage HttpClient::get(const std::string& target, PageKind kind) {
  auto permit = limiter_->acquire(host_);
  httplib::Client cli(endpoint_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  auto res = cli.Get(target);
  if (!res) throw TransportError("GET " + endpoint_ + target + ": " + httplib::to_string(res.error()));
  RawPage page{endpoint_ + target, res->status, std::move(res->body), std::chrono::system_clock::now()};
  if (kind == PageKind::html) std::this_thread::sleep_for(limiter_->policy().page_settle_delay);
  return page;
}

std::optional<std::filesystem::path> fixture_file_for(const std::string& target) {
  std::string path = target;
  std::string query;
  if (auto q = target.find('?'); q != std::string::npos) {
    path = target.substr(0, q);
    query = target.substr(q + 1);
  }
  auto param = [&](std::string_view key) -> std::string {
    std::istringstream qs(query);
    std::string kv;
    while (std::getline(qs, kv, '&'))
      if (kv.size() > key.size() && kv.compare(0, key.size(), key) == 0 && kv[key.size()] == '=')
        return kv.substr(key.size() + 1);
    return {};
  };
  std::vector<std::string> seg;
  std::istringstream ps(path);
  for (std::string s; std::getline(ps, s, '/');)
    if (!s.empty()) seg.push_back(s);

  namespace fs = std::filesystem;
  if (seg.size() == 3 && seg[0] == "api" && seg[1] == "channels" && safe_segment(seg[2]))
    return fs::path("api") / "channels" / (seg[2] + ".json");
  if (seg.size() == 4 && seg[0] == "api" && seg[1] == "channels" && seg[3] == "subscriptions" && safe_segment(seg[2]))
    return fs::path("api") / "channels" / seg[2] / "subscriptions.json";
  if (seg.size() == 2 && seg[0] == "channel" && safe_segment(seg[1])) return fs::path("channel") / (seg[1] + ".html");
  if (seg.size() == 3 && seg[0] == "channel" && seg[2] == "community" && safe_segment(seg[1])) {
    auto page = param("page");
    if (page.empty()) page = "1";
    if (!safe_segment(page)) return std::nullopt;
    return fs::path("channel") / seg[1] / ("community_" + page + ".html");
  }
  if (seg.size() == 1 && seg[0] == "watch") {
    auto v = param("v");
    if (!safe_segment(v)) return std::nullopt;
    return fs::path("watch") / (v + ".html");
  }
  return std::nullopt;
}

FixtureClient::FixtureClient(std::filesystem::path root, std::shared_ptr<RateLimiter> limiter)
    : root_(std::move(root)), limiter_(std::move(limiter)) {
  if (!std::filesystem::is_directory(root_)) throw std::invalid_argument("fixture directory not found: " + root_.string());
}

RawPage FixtureClient::get(const std::string& target, PageKind kind) {
  std::optional<RateLimiter::Permit> permit;
  if (limiter_) permit.emplace(limiter_->acquire(host()));
  RawPage page;
  page.url = "fixture:" + target;
  page.fetched_at = std::chrono::system_clock::now();
  auto rel = fixture_file_for(target);
  if (!rel) {
    page.http_status = 404;
    return page;
  }
  const auto file = root_ / *rel;
  auto error_page = file;
  error_page.replace_extension(".404.html");
  if (std::filesystem::exists(file)) {
    page.body = read_file(file);
  } else if (std::filesystem::exists(error_page)) {
    page.http_status = 404;
    page.body = read_file(error_page);
  } else {
    page.http_status = 404;
  }
  if (limiter_ && kind == PageKind::html) std::this_thread::sleep_for(limiter_->policy().page_settle_delay);
  return page;
}

std::string platform_for_url(std::string_view url, std::string_view link_text) {
  static const std::pair<const char*, const char*> hosts[] = {
      {"facebook.com", "facebook"}, {"fb.com", "facebook"},       {"instagram.com", "instagram"},
      {"twitter.com", "twitter"},   {"x.com", "twitter"},         {"twitch.tv", "twitch"},
      {"tiktok.com", "tiktok"},     {"pinterest.", "pinterest"},  {"snapchat.com", "snapchat"},
      {"linkedin.com", "linkedin"}, {"discord.gg", "discord"},    {"discord.com", "discord"},
      {"patreon.com", "patreon"},   {"reddit.com", "reddit"},     {"vk.com", "vk"},
      {"spotify.com", "spotify"},   {"soundcloud.com", "soundcloud"}, {"teespring.com", "merchandise"},
      {"spreadshirt.", "merchandise"}, {"redbubble.com", "merchandise"}, {"amazon.", "amazon"},
      {"youtube.com", "youtube"},   {"youtu.be", "youtube"},      {"roblox.com", "roblox"},
      {"google.com", "google"},     {"blogspot.com", "blog"},     {"wordpress.com", "blog"},
  };
  auto lower = utf8::ascii_lower(url);
  auto start = lower.find("://");
  start = start == std::string::npos ? 0 : start + 3;
  auto end = lower.find_first_of("/?#", start);
  auto host = lower.substr(start, end == std::string::npos ? std::string::npos : end - start);
  if (auto at = host.find('@'); at != std::string::npos) host = host.substr(at + 1);
  if (auto colon = host.find(':'); colon != std::string::npos) host.resize(colon);
  for (const auto& [needle, name] : hosts) {
    const std::string_view n(needle);
    if (n.back() == '.') {
      if (host.find(n) != std::string::npos) return name;
    } else if (host == n || (host.size() > n.size() && host.ends_with(n) && host[host.size() - n.size() - 1] == '.')) {
      return name;
    }
  }
  auto text = utf8::ascii_lower(link_text);
  if (text.find("merch") != std::string::npos || text.find("shop") != std::string::npos ||
      text.find("store") != std::string::npos)
    return "merchandise";
  return "website";
}

}  // namespace chanaudit
