#include <doctest.h>

#include <httplib.h>

#include "chanaudit/collector.hpp"

using namespace chanaudit;

namespace {

const std::filesystem::path kSite = std::filesystem::path(CHANAUDIT_FIXTURES) / "site";

FetchPolicy fast_policy(int concurrency = 1, int delay_ms = 10) {
  FetchPolicy p;
  p.max_concurrent_requests = concurrency;
  p.min_inter_request_delay = Millis{delay_ms};
  p.page_settle_delay = Millis{1};
  p.retries = 1;
  return p;
}

RawPage page(std::string body, int status = 200) { return RawPage{"https://www.youtube.com/watch?v=x", status, std::move(body), {}}; }

ChannelRecord synthetic_channel(const std::string& id, std::size_t posts) {
  ChannelRecord c;
  c.channel_id = id;
  c.published_at = parse_date("2018-02-03");
  c.description = "channel " + id;
  c.description_char_count = 7 + id.size();
  c.view_count = 100;
  c.video_count = 4;
  c.subscriber_count = 9;
  c.keywords = {"kids", "nursery rhymes"};
  for (std::size_t i = 0; i < posts; ++i) {
    PostRecord p;
    p.date_published = parse_date("2021-01-01");
    p.description = "post " + std::to_string(i);
    p.like_count = i;
    c.posts.push_back(p);
  }
  c.post_count = posts;
  return c;
}

}  // namespace

TEST_CASE("status banners map to reasons") {
  CHECK(parse_status(page("<div class=\"yt-alert-message\">This video has been removed for violating YouTube's Terms of "
                          "Service.</div>"))
            .reason == StatusReason::terms_of_service);
  CHECK(parse_status(page("This video has been removed for violating YouTube's Terms of Service")).reason ==
        StatusReason::terms_of_service);
  auto spam = parse_status(page("<p class=\"yt-alert-message\">This account has been terminated for a violation of "
                                "YouTube&#39;s policy on spam, deceptive practices, and misleading content.</p>"));
  CHECK(spam.reason == StatusReason::spam_deceptive);
  CHECK(spam.raw_message->find("YouTube's policy") != std::string::npos);
  CHECK(parse_status(page("<html><body><div id=player>watch</div></body></html>")).reason == StatusReason::available);
  CHECK(parse_status(page("<div class=\"error-message\">This account has been terminated.</div>", 404)).reason ==
        StatusReason::account_terminated);
  CHECK(parse_status(page("<div class=\"error-message\">This channel does not exist.</div>", 404)).reason ==
        StatusReason::channel_absent);
}

TEST_CASE("unknown messages keep their text") {
  auto s = parse_status(page("<div class=\"yt-alert-message\">Something brand new happened</div>"));
  CHECK_FALSE(s.available);
  CHECK(s.reason == StatusReason::other_unavailable);
  CHECK(s.raw_message == "Something brand new happened");
  auto bare = parse_status(page("", 410));
  CHECK(bare.reason == StatusReason::other_unavailable);
  CHECK_FALSE(bare.raw_message);
}

TEST_CASE("parse_status is total on junk") {
  const std::string junk[] = {"", "<", ">>><<<", "<div class=\"yt-alert-message\">", "\xff\xfe",
                              R"({"playabilityStatus":{"reason":"x"}})", "<a class=\"error-message\"></a>"};
  for (const auto& j : junk) {
    auto s = parse_status(page(j));
    CHECK(s.available == (s.reason == StatusReason::available));
  }
}

TEST_CASE("status rules load from an editable file") {
  auto path = std::filesystem::temp_directory_path() / "chanaudit_rules.csv";
  std::ofstream(path) << "reason,pattern\ncopyright,gone fishing\n";
  auto rules = StatusRules::load(path);
  CHECK(parse_status(page("<div class=\"yt-alert-message\">Gone fishing</div>"), rules).reason == StatusReason::copyright);
  std::ofstream(path) << "reason,pattern\nnot_a_reason,x\n";
  CHECK_THROWS(StatusRules::load(path));
}

TEST_CASE("fixture paths") {
  CHECK(fixture_file_for("/api/channels/UC1") == std::filesystem::path("api/channels/UC1.json"));
  CHECK(fixture_file_for("/channel/UC1/community?page=3") == std::filesystem::path("channel/UC1/community_3.html"));
  CHECK(fixture_file_for("/watch?v=abc") == std::filesystem::path("watch/abc.html"));
  CHECK_FALSE(fixture_file_for("/channel/../etc"));
  CHECK_FALSE(fixture_file_for("/other"));
}

TEST_CASE("platform names") {
  CHECK(platform_for_url("https://www.facebook.com/x") == "facebook");
  CHECK(platform_for_url("https://instagram.com/x") == "instagram");
  CHECK(platform_for_url("https://x.com/y") == "twitter");
  CHECK(platform_for_url("https://box.com/y") == "website");
  CHECK(platform_for_url("https://www.twitch.tv/y") == "twitch");
  CHECK(platform_for_url("https://shop.example.com", "Merch store") == "merchandise");
}

TEST_CASE("fetch_channel from fixtures") {
  FixtureClient client(kSite);
  auto c = fetch_channel(client, "UCfix1");
  CHECK(c.view_count == 1000);
  CHECK(c.video_count == 25);
  CHECK(c.subscriber_count == 50u);
  CHECK(c.subscription_count == 7);
  CHECK(c.country == "US");
  CHECK(format_date(*c.published_at) == "2014-05-02");
  CHECK(c.keywords == std::vector<std::string>{"kids", "nursery rhymes", "songs"});
  CHECK(c.topic_categories.size() == 2);
  CHECK(c.made_for_kids == false);
  REQUIRE(c.linked_platforms.size() == 3);
  CHECK(c.linked_platforms[0].name == "facebook");
  CHECK(c.linked_platforms[2].name == "merchandise");
  CHECK(c.linked_platforms[2].url == "https://shop.example.com/?ref=yt&c=1");
  CHECK(c.links_count == 3);
  CHECK(c.email_present);
  CHECK(c.status.available);
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("terminated and hidden channels") {
  FixtureClient client(kSite);
  auto gone = fetch_channel(client, "UCgone");
  CHECK(gone.status.reason == StatusReason::account_terminated);
  CHECK(gone.status.raw_message == "This account has been terminated.");
  CHECK_FALSE(gone.published_at);
  CHECK(fetch_channel(client, "UCterm").status.reason == StatusReason::copyright);
  auto absent = fetch_channel(client, "UCnowhere");
  CHECK(absent.status.reason == StatusReason::other_unavailable);

  auto hidden = fetch_channel(client, "UChidden");
  CHECK(hidden.hidden_subscribers);
  CHECK_FALSE(hidden.subscriber_count);
  CHECK(hidden.subscription_count == 0);
  CHECK_FALSE(hidden.email_present);
}

TEST_CASE("fetch_posts") {
  FixtureClient client(kSite);
  auto posts = fetch_posts(client, "UCfix1");
  REQUIRE(posts.size() == 3);
  CHECK(posts[0].like_count == 42);
  CHECK(posts[0].hashtags == std::vector<std::string>{"#kids", "#songs"});
  CHECK(posts[0].youtube_links == std::vector<std::string>{"https://www.youtube.com/watch?v=abc123"});
  CHECK(posts[0].thumbnail_video == "abc123");
  CHECK(posts[1].channel_links == std::vector<std::string>{"https://www.youtube.com/channel/UCfriend"});
  CHECK(posts[1].external_links == std::vector<std::string>{"https://shop.example.com/x"});
  CHECK(posts[2].tags == std::vector<std::string>{"holiday"});
  CHECK(fetch_posts(client, "UCfix1", 2).size() == 2);
  CHECK(fetch_posts(client, "UCfix1", 0).empty());
  CHECK(fetch_posts(client, "UCkids").empty());
}

TEST_CASE("video status pages") {
  FixtureClient client(kSite);
  CHECK(fetch_video_status(client, "vok").available);
  CHECK(fetch_video_status(client, "vtos").reason == StatusReason::terms_of_service);
  CHECK(fetch_video_status(client, "vpriv").reason == StatusReason::private_content);
}

TEST_CASE("policy validation") {
  FetchPolicy p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.min_inter_request_delay == Millis{1000});
  CHECK(p.page_settle_delay == Millis{2000});
  p.max_concurrent_requests = 0;
  CHECK_THROWS(p.validate());
  p = {};
  p.min_inter_request_delay = Millis{0};
  CHECK_THROWS(p.validate());
}

TEST_CASE("endpoint guard") {
  auto limiter = std::make_shared<RateLimiter>(fast_policy());
  CHECK(HttpClient::is_local_endpoint("http://127.0.0.1:8080"));
  CHECK(HttpClient::is_local_endpoint("http://localhost"));
  CHECK_FALSE(HttpClient::is_local_endpoint("https://www.youtube.com"));
  CHECK_THROWS_AS(HttpClient("https://www.youtube.com", limiter), std::invalid_argument);
  CHECK_NOTHROW(HttpClient("https://www.youtube.com", limiter, true));
  CHECK_THROWS_AS(HttpClient("not a url", limiter, true), std::invalid_argument);
}

TEST_CASE("rate limiter spaces starts and bounds concurrency") {
  RateLimiter limiter(fast_policy(3, 20));
  std::mutex mu;
  std::vector<Clock::time_point> starts;
  std::atomic<int> in_flight{0}, peak{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 6; ++t)
    threads.emplace_back([&] {
      for (int i = 0; i < 4; ++i) {
        auto permit = limiter.acquire("h");
        int now = ++in_flight;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {
        }
        {
          std::lock_guard lk(mu);
          starts.push_back(Clock::now());
        }
        std::this_thread::sleep_for(Millis{45});
        --in_flight;
      }
    });
  for (auto& t : threads) t.join();
  std::sort(starts.begin(), starts.end());
  for (std::size_t i = 1; i < starts.size(); ++i) CHECK(starts[i] - starts[i - 1] >= Millis{20});
  CHECK(peak.load() <= 3);
  CHECK(limiter.max_observed_in_flight() == 3);
}

TEST_CASE("mock server serves fixture directory") {
  MockServer server;
  server.add_directory(kSite);
  server.start();
  auto limiter = std::make_shared<RateLimiter>(fast_policy());
  HttpClient client(server.endpoint(), limiter);
  auto c = fetch_channel(client, "UCfix1");
  CHECK(c.view_count == 1000);
  CHECK(fetch_posts(client, "UCfix1").size() == 3);
  CHECK(fetch_channel(client, "UCgone").status.reason == StatusReason::account_terminated);

  httplib::Client raw(server.endpoint());
  auto res = raw.Get("/_log");
  REQUIRE(res);
  auto log = nlohmann::json::parse(res->body);
  CHECK(log.size() == server.log().size());
  CHECK(log[0]["target"] == "/api/channels/UCfix1");
}

TEST_CASE("posts are capped at the newest limit") {
  MockServer server;
  add_channel_routes(server, synthetic_channel("UCmany", 150));
  server.start();
  HttpClient client(server.endpoint(), std::make_shared<RateLimiter>(fast_policy(1, 1)));
  auto posts = fetch_posts(client, "UCmany", 100);
  REQUIRE(posts.size() == 100);
  CHECK(posts.front().description == "post 0");
  CHECK(posts.back().description == "post 99");
  // 20 posts per page: five pages fetched, the sixth never requested.
  CHECK(server.log().size() == 5);
}

TEST_CASE("crawl against mock server") {
  MockServer server;
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) {
    auto c = synthetic_channel("UC" + std::to_string(i), 2);
    add_channel_routes(server, c);
    ids.push_back(c.channel_id);
  }
  server.start();

  SUBCASE("wall time honours the delay") {
    auto policy = fast_policy(1, 100);
    HttpClient client(server.endpoint(), std::make_shared<RateLimiter>(policy));
    const auto t0 = Clock::now();
    auto result = crawl(client, {ids, {}, 100}, policy);
    CHECK(Clock::now() - t0 >= Millis{900});
    CHECK(result.corpus.size() == 10);
    CHECK(result.failures.empty());
    auto report = analyse_log(server.log());
    CHECK(report.min_gap_ms >= 100.0);
    CHECK(report.max_concurrency <= 1);
  }

  SUBCASE("result is independent of concurrency") {
    auto p1 = fast_policy(1, 2);
    HttpClient c1(server.endpoint(), std::make_shared<RateLimiter>(p1));
    auto serial = crawl(c1, {ids, {}, 100}, p1);
    auto p4 = fast_policy(4, 2);
    HttpClient c4(server.endpoint(), std::make_shared<RateLimiter>(p4));
    auto parallel = crawl(c4, {ids, {}, 100}, p4);
    CHECK(serial.corpus == parallel.corpus);
    CHECK(serial.corpus.find("UC3")->posts.size() == 2);
    CHECK(serial.corpus.find("UC3")->post_count == 2);
    CHECK(serial.corpus.find("UC3")->keywords == std::vector<std::string>{"kids", "nursery rhymes"});
  }

  SUBCASE("empty id list") {
    auto p = fast_policy();
    HttpClient client(server.endpoint(), std::make_shared<RateLimiter>(p));
    auto result = crawl(client, {}, p);
    CHECK(result.corpus.empty());
    CHECK(result.failures.empty());
  }
}

TEST_CASE("crawl reports partial failures") {
  MockServer server;
  std::vector<std::string> ids;
  for (int i = 0; i < 5; ++i) {
    auto c = synthetic_channel("UCp" + std::to_string(i), 0);
    add_channel_routes(server, c);
    ids.push_back(c.channel_id);
  }
  server.fail("/api/channels/UCp2");
  server.start();
  auto p = fast_policy(2, 2);
  HttpClient client(server.endpoint(), std::make_shared<RateLimiter>(p));
  auto result = crawl(client, {ids, {}, 100}, p);
  CHECK(result.corpus.size() == 4);
  REQUIRE(result.failures.size() == 1);
  CHECK(result.failures[0].channel_id == "UCp2");
  const auto log = server.log();
  const auto attempts = std::count_if(log.begin(), log.end(),
                                      [](const auto& e) { return e.target == "/api/channels/UCp2"; });
  CHECK(attempts == p.retries + 1);
}

TEST_CASE("crawl attaches ground-truth videos with their status") {
  MockServer server;
  auto c = synthetic_channel("UCv", 0);
  VideoRecord ok{"v_ok", "UCv", VideoLabel::suitable, std::nullopt, StatusReport::ok(), std::nullopt};
  VideoRecord gone{"v_gone", "UCv", VideoLabel::disturbing, std::nullopt,
                   StatusReport::unavailable(StatusReason::account_terminated), std::nullopt};
  c.videos = {ok, gone};
  add_channel_routes(server, c);
  server.start();
  auto p = fast_policy(1, 1);
  HttpClient client(server.endpoint(), std::make_shared<RateLimiter>(p));
  ok.status = StatusReport::unavailable(StatusReason::copyright);
  gone.status = StatusReport::ok();
  auto result = crawl(client, {{"UCv"}, {ok, gone}, 100}, p);
  const auto* rec = result.corpus.find("UCv");
  REQUIRE(rec);
  REQUIRE(rec->videos.size() == 2);
  CHECK(rec->videos[0].status.available);
  CHECK(rec->videos[1].status.reason == StatusReason::account_terminated);
  CHECK(rec->videos[1].label == VideoLabel::disturbing);
}

TEST_CASE("transport errors are retried then reported") {
  auto p = fast_policy(1, 1);
  HttpClient client("http://127.0.0.1:1", std::make_shared<RateLimiter>(p), false, Millis{200});
  auto result = crawl(client, {{"UCx"}, {}, 100}, p);
  CHECK(result.corpus.empty());
  REQUIRE(result.failures.size() == 1);
  CHECK(result.failures[0].error.find("attempts") != std::string::npos);
}
