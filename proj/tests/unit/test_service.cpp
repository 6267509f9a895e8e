#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "chanaudit/service.hpp"

using namespace chanaudit;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

Corpus small_corpus() {
  SynthOptions o;
  o.channels = 80;
  o.seed = 11;
  return synth_corpus(o);
}

Hyperparams tiny_forest() {
  Hyperparams h;
  h.rf.trees = 10;
  return h;
}

TrainedModel small_model(const Corpus& c) {
  auto an = analyse_corpus(c);
  return train_corpus_model(labeled_channels(c, an), FeatureSpec::full(), ModelKind::random_forest, tiny_forest(), 7);
}

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("chanaudit_svc_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ServiceConfig base_config(const fs::path& dir) {
  ServiceConfig c;
  c.decisions = dir / "decisions.jsonl";
  c.hyper = tiny_forest();
  c.folds = 0;
  return c;
}

struct Running {
  std::unique_ptr<ReviewService> svc;
  std::unique_ptr<httplib::Client> cli;

  Running(ServiceConfig c, Corpus corpus, std::optional<TrainedModel> m) {
    svc = std::make_unique<ReviewService>(std::move(c), std::move(corpus), std::move(m));
    const int port = svc->start(0);
    cli = std::make_unique<httplib::Client>("127.0.0.1", port);
  }

  json get(const std::string& path, int expect) {
    auto r = cli->Get(path);
    REQUIRE(r);
    CHECK(r->status == expect);
    return json::parse(r->body);
  }

  httplib::Result post(const std::string& path, const json& body) {
    return cli->Post(path, body.dump(), "application/json");
  }

  json decide(const std::string& id, const std::string& decision, const std::string& mod, const std::string& ts,
              int expect) {
    auto r = post("/v1/channels/" + id + "/decision",
                  {{"decision", decision}, {"moderator_id", mod}, {"timestamp", ts}});
    REQUIRE(r);
    CHECK(r->status == expect);
    return json::parse(r->body);
  }

  json finish_job(int id) {
    svc->wait_for_jobs();
    return get("/v1/jobs/" + std::to_string(id), 200);
  }
};

}  // namespace

TEST_CASE("decision payloads") {
  auto d = review_decision_from_json(
      {{"decision", "confirm_disturbing"}, {"moderator_id", "m1"}, {"timestamp", "2024-05-01T10:00:00Z"}});
  CHECK(d.timestamp == "2024-05-01T10:00:00.000Z");
  CHECK_FALSE(d.note);
  CHECK(review_decision_from_json(to_json(d)) == d);
  CHECK_THROWS_AS(review_decision_from_json({{"decision", "maybe"}, {"moderator_id", "m1"}}), std::invalid_argument);
  CHECK_THROWS_AS(review_decision_from_json({{"decision", "confirm_suitable"}}), std::invalid_argument);
  CHECK_THROWS_AS(review_decision_from_json({{"decision", "confirm_suitable"}, {"moderator_id", "m"}, {"timestamp", "yesterday"}}),
                  std::invalid_argument);
  CHECK(utc_timestamp().size() == 24);
}

TEST_CASE("decision store replays, keeps one decision per moderator and drops a torn tail") {
  const auto dir = fresh_dir("store");
  const auto path = dir / "d.jsonl";
  {
    DecisionStore s(path);
    CHECK(s.put({"UCa", Decision::confirm_disturbing, "m1", "2024-01-01T00:00:00Z", std::nullopt}) ==
          DecisionStore::PutResult::created);
    CHECK(s.put({"UCa", Decision::confirm_suitable, "m1", "2024-01-02T00:00:00Z", "second look"}) ==
          DecisionStore::PutResult::replaced);
    CHECK(s.put({"UCb", Decision::needs_more_review, "m2", "2024-01-01T00:00:00Z", std::nullopt}) ==
          DecisionStore::PutResult::created);
    CHECK_THROWS_AS(s.put({"UCb", Decision::confirm_suitable, "m1", "2023-12-31T00:00:00Z", std::nullopt}),
                    std::invalid_argument);
    CHECK(s.sequence() == 3);
  }
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"channel_id":"UCc","decis)";
  }
  DecisionStore again(path);
  CHECK(again.all().size() == 2);
  CHECK(again.latest("UCa")->decision == Decision::confirm_suitable);
  CHECK(again.latest("UCa")->note == "second look");
  CHECK(again.label_overrides() == std::map<std::string, int>{{"UCa", 0}});
  CHECK(again.export_labels_csv() == "channel_id,label\nUCa,suitable\n");
  again.compact();
  std::ifstream in(path);
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 2);
  CHECK(DecisionStore(path).all() == again.all());
}

TEST_CASE("latest confirmation across moderators sets the label") {
  DecisionStore s;
  s.put({"UCa", Decision::confirm_disturbing, "m1", "2024-01-01T00:00:00Z", std::nullopt});
  s.put({"UCa", Decision::confirm_suitable, "m2", "2024-01-03T00:00:00Z", std::nullopt});
  s.put({"UCa", Decision::needs_more_review, "m3", "2024-01-04T00:00:00Z", std::nullopt});
  CHECK(s.label_overrides().at("UCa") == 0);
  CHECK(s.latest("UCa")->moderator_id == "m3");
}

TEST_CASE("queue follows the ranking and pages") {
  const auto dir = fresh_dir("queue");
  auto corpus = small_corpus();
  auto model = small_model(corpus);
  const auto expected = rank_channels(model, corpus, analyse_corpus(corpus), Severity::prob);
  Running s(base_config(dir), corpus, model);

  auto h = s.get("/v1/health", 200);
  CHECK(h["model_version"] == 1);
  auto page = s.get("/v1/queue?limit=1000", 200);
  CHECK(page["total"] == 80);
  REQUIRE(page["entries"].size() == 80);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(page["entries"][i]["channel_id"] == expected[i].channel_id);
    CHECK(page["entries"][i]["rank"] == i + 1);
    CHECK(page["entries"][i]["decision"] == "undecided");
    CHECK(page["entries"][i]["top_groups"].size() <= 3);
  }
  auto mid = s.get("/v1/queue?limit=5&offset=10", 200);
  REQUIRE(mid["entries"].size() == 5);
  CHECK(mid["entries"][0]["channel_id"] == expected[10].channel_id);
  CHECK(mid["entries"][0]["rank"] == 11);
  auto past = s.get("/v1/queue?offset=500", 200);
  CHECK(past["entries"].empty());
  CHECK(past["total"] == 80);
  auto r = s.cli->Get("/v1/queue?limit=2");
  REQUIRE(r);
  CHECK(r->get_header_value("X-Total-Count") == "80");
  s.get("/v1/queue?limit=-1", 400);
  s.get("/v1/queue?limit=abc", 400);
  s.get("/v1/queue?filter=some", 400);
}

TEST_CASE("queue filters by decision state") {
  const auto dir = fresh_dir("filter");
  SynthOptions o;
  o.channels = 12;
  auto corpus = synth_corpus(o);
  auto model = small_model(corpus);
  Running s(base_config(dir), corpus, model);
  s.decide(corpus.channels()[0].channel_id, "confirm_suitable", "m1", "2024-01-01T00:00:00Z", 201);
  CHECK(s.get("/v1/queue?filter=decided", 200)["total"] == 1);
  CHECK(s.get("/v1/queue?filter=undecided", 200)["total"] == 11);
  int k = 10;
  for (const auto& c : corpus.channels())
    if (c.channel_id != corpus.channels()[0].channel_id)
      s.decide(c.channel_id, "needs_more_review", "m1", "2024-01-01T00:00:" + std::to_string(k++) + "Z", 201);
  auto und = s.get("/v1/queue?filter=undecided", 200);
  CHECK(und["total"] == 0);
  CHECK(und["entries"].empty());
}

TEST_CASE("queue without a model answers 409 with a hint") {
  const auto dir = fresh_dir("nomodel");
  Running s(base_config(dir), small_corpus(), std::nullopt);
  auto j = s.get("/v1/queue", 409);
  CHECK(j["error"] == "no ranking loaded");
  CHECK(j.contains("hint"));
  auto ch = s.get("/v1/channels/" + small_corpus().channels()[0].channel_id, 200);
  CHECK(ch["model_version"].is_null());
}

TEST_CASE("channel detail") {
  const auto dir = fresh_dir("detail");
  auto corpus = small_corpus();
  auto model = small_model(corpus);
  std::string hidden;
  for (const auto& c : corpus.channels())
    if (c.hidden_subscribers) hidden = c.channel_id;
  REQUIRE_FALSE(hidden.empty());
  Running s(base_config(dir), corpus, model);
  auto j = s.get("/v1/channels/" + hidden, 200);
  CHECK(j["subscribers"]["state"] == "hidden");
  CHECK(j["subscribers"]["count"].is_null());
  CHECK(j["channel"]["channel_id"] == hidden);
  CHECK(j["features"]["names"].size() == model.feature_names.size());
  CHECK(j["features"]["values"].size() == model.feature_names.size());
  CHECK(j["rank"].get<int>() >= 1);
  CHECK(j.contains("sentiment"));
  CHECK(j.contains("attributions"));
  s.get("/v1/channels/UCnobody", 404);
}

TEST_CASE("decisions create, replace and validate") {
  const auto dir = fresh_dir("decide");
  auto corpus = small_corpus();
  const auto a = corpus.channels()[0].channel_id, b = corpus.channels()[1].channel_id;
  {
    Running s(base_config(dir), corpus, small_model(corpus));
    auto j = s.decide(a, "confirm_disturbing", "m1", "2024-05-01T10:00:00Z", 201);
    CHECK(j["channel_id"] == a);
    CHECK(j["timestamp"] == "2024-05-01T10:00:00.000Z");
    s.decide(a, "confirm_suitable", "m1", "2024-05-01T11:00:00Z", 200);
    s.decide(b, "confirm_disturbing", "m1", "2024-05-01T12:00:00Z", 201);
    s.decide(b, "confirm_disturbing", "m1", "2024-05-01T09:00:00Z", 409);
    s.decide("UCnobody", "confirm_disturbing", "m1", "2024-05-01T13:00:00Z", 404);

    auto bad = s.cli->Post("/v1/channels/" + a + "/decision", "{not json", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    auto unknown = s.post("/v1/channels/" + a + "/decision", {{"decision", "ban"}, {"moderator_id", "m1"}});
    REQUIRE(unknown);
    CHECK(unknown->status == 400);
    auto mismatch = s.post("/v1/channels/" + a + "/decision",
                           {{"channel_id", b}, {"decision", "confirm_suitable"}, {"moderator_id", "m2"}});
    REQUIRE(mismatch);
    CHECK(mismatch->status == 400);

    auto csv = s.cli->Get("/v1/decisions/export");
    REQUIRE(csv);
    CHECK(csv->status == 200);
    CHECK(csv->get_header_value("Content-Type") == "text/csv");
    const std::string want = "channel_id,label\n" + std::min(a, b) + "," + (a < b ? "suitable" : "disturbing") +
                             "\n" + std::max(a, b) + "," + (a < b ? "disturbing" : "suitable") + "\n";
    CHECK(csv->body == want);
    CHECK(s.get("/v1/decisions", 200).size() == 2);
    auto entry = s.get("/v1/channels/" + a, 200);
    CHECK(entry["decisions"].size() == 1);
    CHECK(entry["decisions"][0]["decision"] == "confirm_suitable");
  }
  Running restarted(base_config(dir), corpus, std::nullopt);
  CHECK(restarted.get("/v1/decisions", 200).size() == 2);
  restarted.decide(a, "confirm_disturbing", "m1", "2024-05-01T11:30:00Z", 409);
}

TEST_CASE("retrain swaps the model only on success") {
  const auto dir = fresh_dir("retrain");
  auto corpus = small_corpus();
  auto cfg = base_config(dir);
  cfg.model = dir / "model.json";
  cfg.folds = 3;
  Running s(cfg, corpus, small_model(corpus));
  CHECK(s.svc->model_version() == 1);

  auto none = s.post("/v1/retrain", json::object());
  REQUIRE(none);
  CHECK(none->status == 409);
  CHECK(json::parse(none->body)["required"] == 1);

  const auto id = corpus.channels()[3].channel_id;
  s.decide(id, "confirm_disturbing", "m1", "2024-05-01T10:00:00Z", 201);
  auto r = s.post("/v1/retrain", json::object());
  REQUIRE(r);
  CHECK(r->status == 202);
  auto job = s.finish_job(json::parse(r->body)["job_id"]);
  CHECK(job["state"] == "succeeded");
  CHECK(job["model_version"] == 2);
  CHECK(job["report"].contains("auc"));
  CHECK(s.svc->model_version() == 2);
  CHECK(fs::exists(cfg.model));
  CHECK(load_model(cfg.model).pipeline);
  CHECK(s.get("/v1/queue", 200)["model_version"] == 2);

  auto again = s.post("/v1/retrain", json::object());
  REQUIRE(again);
  CHECK(again->status == 409);

  s.svc->set_trainer([](const LabeledChannels&) -> TrainedModel { throw std::runtime_error("trainer exploded"); });
  s.decide(id, "confirm_suitable", "m1", "2024-05-01T11:00:00Z", 200);
  auto f = s.post("/v1/retrain", json::object());
  REQUIRE(f);
  CHECK(f->status == 202);
  auto failed = s.finish_job(json::parse(f->body)["job_id"]);
  CHECK(failed["state"] == "failed");
  CHECK(failed["error"] == "trainer exploded");
  CHECK(s.svc->model_version() == 2);
  CHECK(s.get("/v1/queue", 200)["model_version"] == 2);
  s.get("/v1/jobs/999", 404);
}

TEST_CASE("a second retrain while one runs is refused") {
  const auto dir = fresh_dir("concurrent");
  auto corpus = small_corpus();
  Running s(base_config(dir), corpus, std::nullopt);
  std::atomic<bool> release{false};
  s.svc->set_trainer([&](const LabeledChannels& d) {
    while (!release) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    return train_corpus_model(d, FeatureSpec::full(), ModelKind::random_forest, tiny_forest(), 7);
  });
  s.decide(corpus.channels()[0].channel_id, "confirm_suitable", "m1", "2024-05-01T10:00:00Z", 201);
  auto first = s.post("/v1/retrain", json::object());
  REQUIRE(first);
  CHECK(first->status == 202);
  auto second = s.post("/v1/retrain", json::object());
  REQUIRE(second);
  CHECK(second->status == 409);
  CHECK(json::parse(second->body)["job_id"] == json::parse(first->body)["job_id"]);
  release = true;
  auto job = s.finish_job(json::parse(first->body)["job_id"]);
  CHECK(job["state"] == "succeeded");
  CHECK(job["model_version"] == 1);
  CHECK(s.get("/v1/queue", 200)["total"] == 80);
}

TEST_CASE("bearer token") {
  const auto dir = fresh_dir("token");
  auto cfg = base_config(dir);
  cfg.token = "s3cret";
  Running s(cfg, small_corpus(), std::nullopt);
  s.get("/v1/health", 401);
  s.cli->set_bearer_token_auth("s3cret");
  s.get("/v1/health", 200);
  s.cli->set_bearer_token_auth("wrong");
  s.get("/v1/health", 401);
}

TEST_CASE("service config") {
  const auto dir = fresh_dir("config");
  {
    std::ofstream out(dir / "svc.json");
    out << R"({"port": 9001, "corpus": "corpus.jsonl", "model": "/abs/model.json", "decisions": "d.jsonl",
               "severity": "prob_times_count", "kind": "logitboost", "folds": 0, "creation_time_only": true,
               "hyper": {"rf": {"trees": 5}}, "token": "t"})";
  }
  auto c = load_service_config(dir / "svc.json");
  CHECK(c.port == 9001);
  CHECK(c.corpus == dir / "corpus.jsonl");
  CHECK(c.model == fs::path("/abs/model.json"));
  CHECK(c.decisions == dir / "d.jsonl");
  CHECK(c.severity == Severity::prob_times_count);
  CHECK(c.kind == ModelKind::logitboost_meta);
  CHECK(c.folds == 0);
  CHECK(c.creation_time_only);
  CHECK(c.hyper.rf.trees == 5);
  CHECK(c.token == "t");
  CHECK_THROWS(service_config_from_json({{"port", 70000}}));
  CHECK_THROWS(service_config_from_json({{"folds", 1}}));
  CHECK_THROWS(service_config_from_json({{"severity", "loud"}}));
  CHECK_THROWS(service_config_from_json(json::array()));
  CHECK_THROWS(load_service_config(dir / "absent.json"));

  SynthOptions o;
  o.channels = 30;
  {
    std::ofstream out(dir / "corpus.jsonl");
    write_jsonl(synth_corpus(o), out);
  }
  c.model = dir / "model.json";
  c.port = 0;
  auto svc = ReviewService::from_config(c);
  CHECK(svc->model_version() == 0);
}
