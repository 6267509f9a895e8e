#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "chanaudit/corpus.hpp"

namespace chanaudit {

using Clock = std::chrono::steady_clock;
using Millis = std::chrono::milliseconds;

struct FetchPolicy {
  int max_concurrent_requests = 1;
  Millis min_inter_request_delay{1000};
  Millis page_settle_delay{2000};
  int retries = 2;

  /// Throws std::invalid_argument on non-positive delays or concurrency.
  void validate() const;
};

enum class PageKind { api, html };

struct RawPage {
  std::string url;
  int http_status = 200;
  std::string body;
  std::chrono::system_clock::time_point fetched_at{};
};

/// Network-level failure (connection refused, timeout). HTTP error codes are
/// not transport errors; they come back as RawPage::http_status.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StatusRules {
 public:
  struct Rule {
    StatusReason reason;
    std::string pattern;
    std::regex re;
  };

  StatusRules() = default;
  explicit StatusRules(std::vector<Rule> rules) : rules_(std::move(rules)) {}

  /// CSV with columns reason,pattern. Patterns are ECMAScript regexes matched
  /// case-insensitively; the first matching row wins.
  static StatusRules load(const std::filesystem::path& path);
  static const StatusRules& defaults();

  std::optional<StatusReason> match(std::string_view message) const;
  const std::vector<Rule>& rules() const { return rules_; }

 private:
  std::vector<Rule> rules_;
};

/// Maps an error banner on a watch/channel page to a removal reason. Total:
/// unknown messages become other_unavailable with the text retained.
StatusReport parse_status(const RawPage& page, const StatusRules& rules = StatusRules::defaults());

std::string html_unescape(std::string s);

/// Text of the page's error banner, if any.
std::optional<std::string> extract_status_message(std::string_view html);

/// Shared politeness gate. One instance is shared by every worker of a crawl;
/// request starts to the same host are spaced by at least the policy delay and
/// at most max_concurrent_requests are in flight per host.
class RateLimiter {
 public:
  explicit RateLimiter(FetchPolicy policy, Millis slack = Millis{5});

  class Permit {
   public:
    Permit() = default;
    Permit(Permit&& other) noexcept;
    Permit& operator=(Permit&& other) noexcept;
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    ~Permit();

   private:
    friend class RateLimiter;
    Permit(RateLimiter* owner, std::string host) : owner_(owner), host_(std::move(host)) {}
    void release();
    RateLimiter* owner_ = nullptr;
    std::string host_;
  };

  Permit acquire(const std::string& host);
  const FetchPolicy& policy() const { return policy_; }
  int max_observed_in_flight() const { return max_in_flight_.load(); }

 private:
  struct HostState {
    int in_flight = 0;
    std::optional<Clock::time_point> last_start;
  };

  void release(const std::string& host);

  FetchPolicy policy_;
  Millis slack_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, HostState> hosts_;
  std::atomic<int> max_in_flight_{0};
};

class Client {
 public:
  virtual ~Client() = default;
  /// `target` is a path with optional query, e.g. "/channel/UC1/community?page=2".
  virtual RawPage get(const std::string& target, PageKind kind) = 0;
  virtual std::string host() const = 0;
};

/// HTTP client bound to one endpoint. Non-localhost endpoints are refused
/// unless `allow_remote` is set (the --i-understand-tos flag).
class HttpClient : public Client {
 public:
  HttpClient(std::string endpoint, std::shared_ptr<RateLimiter> limiter, bool allow_remote = false,
             Millis timeout = Millis{10000});
  RawPage get(const std::string& target, PageKind kind) override;
  std::string host() const override { return host_; }

  static bool is_local_endpoint(std::string_view endpoint);

 private:
  std::string endpoint_;
  std::string host_;
  std::shared_ptr<RateLimiter> limiter_;
  Millis timeout_;
};

/// Serves pages from a directory tree laid out like the mock server:
///   api/channels/{id}.json, api/channels/{id}/subscriptions.json,
///   channel/{id}.html, channel/{id}/community_{page}.html, watch/{video}.html.
/// A missing file is a 404; a sibling "{name}.404.html" supplies its body.
class FixtureClient : public Client {
 public:
  explicit FixtureClient(std::filesystem::path root, std::shared_ptr<RateLimiter> limiter = nullptr);
  RawPage get(const std::string& target, PageKind kind) override;
  std::string host() const override { return "fixtures"; }

 private:
  std::filesystem::path root_;
  std::shared_ptr<RateLimiter> limiter_;
};

/// Maps a request target to a fixture file name relative to the fixture root.
std::optional<std::filesystem::path> fixture_file_for(const std::string& target);

/// Platform name for a linked URL, e.g. "https://www.instagram.com/x" -> "instagram".
std::string platform_for_url(std::string_view url, std::string_view link_text = {});

/// API metadata, subscriptions, About tab and status. Posts and ground-truth
/// videos are not fetched here.
ChannelRecord fetch_channel(Client& client, const std::string& channel_id, int retries = 2);

/// Newest `limit` Community-tab posts; empty when the tab is absent.
std::vector<PostRecord> fetch_posts(Client& client, const std::string& channel_id, std::size_t limit = 100,
                                    int retries = 2);

StatusReport fetch_video_status(Client& client, const std::string& video_id, int retries = 2);

struct CrawlFailure {
  std::string channel_id;
  std::string error;
};

struct CrawlResult {
  Corpus corpus;
  std::vector<CrawlFailure> failures;
};

struct CrawlRequest {
  std::vector<std::string> channel_ids;
  // Optional ground-truth videos; their page status is fetched and they are
  // attached to their channel.
  std::vector<VideoRecord> videos;
  std::size_t post_limit = 100;
};

CrawlResult crawl(Client& client, const CrawlRequest& request, const FetchPolicy& policy);

/// In-process HTTP server impersonating the channel endpoints. Every request is
/// recorded with start/end times, exposed at GET /_log.
class MockServer {
 public:
  struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "text/html; charset=utf-8";
  };

  struct LogEntry {
    std::string target;
    double start_ms = 0;  // since server start
    double end_ms = 0;
  };

  MockServer();
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  void add(const std::string& target, Response response);
  /// Loads every fixture file under `root` (see FixtureClient for the layout).
  void add_directory(const std::filesystem::path& root);
  /// Targets whose handler returns 500 (transport-level failure for the crawler).
  void fail(const std::string& target);
  void set_latency(Millis latency) { latency_ms_ = latency.count(); }

  /// Binds to 127.0.0.1; port 0 picks a free port. Returns the bound port.
  int start(int port = 0);
  void stop();
  /// Blocks until stop() is called from another thread or a signal.
  void wait();
  std::string endpoint() const;

  std::vector<LogEntry> log() const;
  void clear_log();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<long long> latency_ms_{0};
};

/// Adds API, About and Community routes for a record as the mock would serve it.
void add_channel_routes(MockServer& server, const ChannelRecord& record, std::size_t posts_per_page = 20);

struct PolitenessReport {
  std::size_t requests = 0;
  double min_gap_ms = 0;  // smallest gap between consecutive request starts
  int max_concurrency = 0;
};

PolitenessReport analyse_log(std::vector<MockServer::LogEntry> log);

}  // namespace chanaudit
