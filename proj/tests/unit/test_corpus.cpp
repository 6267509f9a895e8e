#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "chanaudit/corpus.hpp"

using namespace chanaudit;

namespace {

const std::filesystem::path kFixtures = CHANAUDIT_FIXTURES;

VideoRecord video(std::string id, std::string channel, VideoLabel label) {
  VideoRecord v;
  v.video_id = std::move(id);
  v.channel_id = std::move(channel);
  v.label = label;
  return v;
}

ChannelRecord channel(std::string id, std::vector<VideoLabel> labels) {
  ChannelRecord c;
  c.channel_id = id;
  c.published_at = parse_date("2018-01-01");
  int i = 0;
  for (auto l : labels) c.videos.push_back(video(id + "_v" + std::to_string(i++), id, l));
  return c;
}

}  // namespace

TEST_CASE("dates parse with optional time suffix") {
  CHECK(format_date(parse_date("2017-11-20T08:00:00Z")) == "2017-11-20");
  CHECK_THROWS(parse_date("2017-13-01"));
  CHECK_THROWS(parse_date("17-01-01"));
}

TEST_CASE("three channel fixture loads") {
  auto corpus = load_corpus(kFixtures / "three_channels.jsonl", CorpusFormat::jsonl);
  REQUIRE(corpus.size() == 3);
  const auto* b = corpus.find("UCb");
  REQUIRE(b);
  CHECK(b->hidden_subscribers);
  CHECK_FALSE(b->subscriber_count.has_value());
  CHECK(b->status.reason == StatusReason::account_terminated);
  CHECK(b->posts.size() == 2);
  CHECK(b->videos[1].channel_id == "UCb");
  CHECK(corpus.find("UCa")->description_char_count == 15);
  CHECK(corpus.video_total() == 6);
}

TEST_CASE("jsonl round trip is field for field") {
  auto corpus = load_corpus(kFixtures / "three_channels.jsonl", CorpusFormat::jsonl);
  std::stringstream buf;
  write_jsonl(corpus, buf);
  auto again = read_jsonl(buf);
  CHECK(again == corpus);
}

TEST_CASE("negative count is rejected with line number") {
  std::ifstream in(kFixtures / "three_channels.jsonl");
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  auto pos = l2.find("\"video_count\":40");
  REQUIRE(pos != std::string::npos);
  l2.replace(pos, 16, "\"video_count\":-1");
  std::stringstream buf(l1 + "\n" + l2 + "\n");
  try {
    read_jsonl(buf);
    FAIL("expected CorpusError");
  } catch (const CorpusError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("video_count") != std::string::npos);
  }
}

TEST_CASE("malformed json reports its line") {
  std::stringstream buf("\n{\"schema_version\":1,\n");
  try {
    read_jsonl(buf);
    FAIL("expected CorpusError");
  } catch (const CorpusError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("schema version is checked") {
  std::stringstream buf(R"({"schema_version":2,"channel_id":"x","published_at":"2020-01-01","view_count":0,"video_count":0})");
  CHECK_THROWS_AS(read_jsonl(buf), CorpusError);
}

TEST_CASE("invariants") {
  SUBCASE("hidden subscribers with a count") {
    auto c = channel("UC1", {VideoLabel::suitable});
    c.hidden_subscribers = true;
    c.subscriber_count = 10;
    CHECK_THROWS_AS(validate(c), CorpusError);
    c.subscriber_count = 0;
    CHECK_NOTHROW(validate(c));
  }
  SUBCASE("description char count") {
    auto c = channel("UC1", {});
    c.description = "a b\tc";
    c.description_char_count = 5;
    CHECK_THROWS_AS(validate(c), CorpusError);
    c.description_char_count = 3;
    CHECK_NOTHROW(validate(c));
  }
  SUBCASE("post urls") {
    auto c = channel("UC1", {});
    PostRecord p;
    p.external_links = {"not a url"};
    c.posts.push_back(p);
    CHECK_THROWS_AS(validate(c), CorpusError);
  }
  SUBCASE("status consistency") {
    auto c = channel("UC1", {});
    c.status.available = false;
    CHECK_THROWS_AS(validate(c), CorpusError);
  }
}

TEST_CASE("referential integrity") {
  auto a = channel("UC1", {VideoLabel::suitable});
  a.videos[0].channel_id = "UC9";
  CHECK_THROWS_AS(Corpus({a}), CorpusError);
  auto b = channel("UC2", {VideoLabel::suitable});
  auto c = channel("UC3", {});
  c.videos.push_back(b.videos[0]);
  c.videos[0].channel_id = "UC3";
  CHECK_THROWS_AS(Corpus({b, c}), CorpusError);
  CHECK_THROWS_AS(Corpus({b, b}), CorpusError);
}

TEST_CASE("csv bundle loads read-only interop format") {
  auto corpus = load_corpus(kFixtures / "csv_bundle", CorpusFormat::csv_bundle);
  REQUIRE(corpus.size() == 2);
  const auto* x = corpus.find("UCx");
  CHECK(x->keywords == std::vector<std::string>{"songs", "rhymes"});
  CHECK(x->linked_platforms.size() == 2);
  CHECK(x->links_count == 2);
  CHECK(x->subscriber_count == 120u);
  const auto* y = corpus.find("UCy");
  CHECK(y->hidden_subscribers);
  CHECK_FALSE(y->subscriber_count);
  CHECK(y->status.reason == StatusReason::account_terminated);
  CHECK(y->posts.size() == 1);
  CHECK(y->posts[0].like_count == 12);
  CHECK(y->videos[0].status.reason == StatusReason::private_content);
  CHECK(y->videos[0].status.raw_message == "This video is private.");
}

TEST_CASE("csv bundle with dangling video reference") {
  auto dir = std::filesystem::temp_directory_path() / "chanaudit_dangling";
  std::filesystem::create_directories(dir);
  std::filesystem::copy_file(kFixtures / "csv_bundle" / "channels.csv", dir / "channels.csv",
                             std::filesystem::copy_options::overwrite_existing);
  std::ofstream(dir / "videos.csv") << "video_id,channel_id,label\nq1,UCnope,suitable\n";
  std::filesystem::remove(dir / "posts.csv");
  try {
    read_csv_bundle(dir);
    FAIL("expected CorpusError");
  } catch (const CorpusError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("UCnope") != std::string::npos);
  }
}

TEST_CASE("label propagation") {
  Corpus corpus({channel("A", {VideoLabel::suitable, VideoLabel::suitable}),
                 channel("B", {VideoLabel::suitable, VideoLabel::disturbing}),
                 channel("C", {VideoLabel::disturbing}),
                 channel("D", {VideoLabel::restricted, VideoLabel::irrelevant}),
                 channel("E", {VideoLabel::disturbing, VideoLabel::irrelevant, VideoLabel::suitable,
                               VideoLabel::suitable})});
  auto p = propagate_labels(corpus);
  CHECK(p.labels.at("A").value == ChannelClass::suitable);
  CHECK(p.labels.at("A").disturbing_ratio == 0.0);
  CHECK(p.labels.at("B").value == ChannelClass::disturbing);
  CHECK(p.labels.at("B").disturbing_ratio == 0.5);
  CHECK(p.labels.at("C").disturbing_ratio == 1.0);
  CHECK(p.labels.at("E").disturbing_ratio == doctest::Approx(1.0 / 3.0));
  CHECK(p.excluded == std::vector<std::string>{"D"});
  CHECK(p.warnings.size() == 1);
  CHECK(p.labels.size() + p.excluded.size() == corpus.size());
  for (const auto& [id, l] : p.labels) CHECK((l.value == ChannelClass::disturbing) == (l.disturbing_ratio > 0));
}

TEST_CASE("label propagation is order independent") {
  auto c = channel("B", {VideoLabel::disturbing, VideoLabel::suitable, VideoLabel::suitable});
  auto first = label_from_videos(c.videos);
  std::reverse(c.videos.begin(), c.videos.end());
  CHECK(label_from_videos(c.videos) == first);
}

TEST_CASE("status breakdown counts") {
  auto c = channel("X", std::vector<VideoLabel>(10, VideoLabel::disturbing));
  for (int i = 0; i < 3; ++i) c.videos[i].status = StatusReport::unavailable(StatusReason::account_terminated);
  c.videos[3].status = StatusReport::unavailable(StatusReason::terms_of_service, "ToS");
  Corpus corpus({c});
  auto b = status_breakdown(corpus, ChannelClass::disturbing);
  CHECK(b.total == 10);
  CHECK(b.percent(StatusReason::available) == doctest::Approx(60.0));
  CHECK(b.percent(StatusReason::account_terminated) == doctest::Approx(30.0));
  CHECK(b.percent(StatusReason::terms_of_service) == doctest::Approx(10.0));
  CHECK(b.removed_percent() == doctest::Approx(40.0));
  double sum = 0;
  for (const auto& [r, n] : b.counts) sum += b.percent(r);
  CHECK(sum == doctest::Approx(100.0));
  CHECK_THROWS_AS(status_breakdown(corpus, ChannelClass::suitable), std::invalid_argument);
}
