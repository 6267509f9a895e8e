#include <condition_variable>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <httplib.h>

#include "chanaudit/service.hpp"

namespace chanaudit {

using nlohmann::json;

namespace {

struct Snapshot {
  std::shared_ptr<const TrainedModel> model;
  int version = 0;
  std::vector<RankedChannel> ranking;
  std::unordered_map<std::string, std::size_t> position;
};

struct Job {
  int id = 0;
  std::string state = "queued";  // queued, running, succeeded, failed
  std::string error;
  int model_version = 0;
  json report;
  std::string started, finished;
};

json job_json(const Job& j) {
  json out{{"job_id", j.id}, {"state", j.state}, {"started", j.started}};
  if (!j.finished.empty()) out["finished"] = j.finished;
  if (j.state == "succeeded") {
    out["model_version"] = j.model_version;
    if (!j.report.is_null()) out["report"] = j.report;
  }
  if (j.state == "failed") out["error"] = j.error;
  return out;
}

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg, json extra = json::object()) {
  extra["error"] = msg;
  send(res, status, extra);
}

std::string status_summary(const StatusReport& s) {
  return s.available ? "available" : std::string(to_string(s.reason));
}

json subscribers_json(const ChannelRecord& c) {
  if (c.hidden_subscribers) return json{{"state", "hidden"}, {"count", nullptr}};
  if (!c.subscriber_count) return json{{"state", "missing"}, {"count", nullptr}};
  return json{{"state", "visible"}, {"count", *c.subscriber_count}};
}

std::size_t parse_size(const httplib::Request& req, const char* key, std::size_t def) {
  if (!req.has_param(key)) return def;
  const auto v = req.get_param_value(key);
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (v.empty() || pos != v.size() || v[0] == '-') throw std::invalid_argument(std::string(key) + " must be a non-negative integer");
  return static_cast<std::size_t>(n);
}

}  // namespace

struct ReviewService::Impl {
  ServiceConfig config;
  Corpus corpus;
  std::vector<ChannelAnalytics> analytics;
  std::unordered_map<std::string, std::size_t> corpus_index;
  std::map<std::string, double> counts;
  DecisionStore store;
  Trainer trainer;

  mutable std::mutex snap_mu;
  std::shared_ptr<const Snapshot> snap;

  std::mutex job_mu;
  std::condition_variable job_cv;
  std::map<int, Job> jobs;
  bool running = false;
  int next_job = 1;
  std::uint64_t trained_seq = 0;
  std::thread worker;

  httplib::Server svr;
  std::thread listener;
  int port = 0;

  Impl(ServiceConfig c, Corpus corp)
      : config(std::move(c)), corpus(std::move(corp)), store(config.decisions) {}

  std::shared_ptr<const Snapshot> current() const {
    std::lock_guard lk(snap_mu);
    return snap;
  }

  std::shared_ptr<const Snapshot> build_snapshot(std::shared_ptr<const TrainedModel> model, int version) const {
    auto s = std::make_shared<Snapshot>();
    s->model = std::move(model);
    s->version = version;
    s->ranking = rank_channels(*s->model, corpus, analytics, config.severity, counts);
    for (std::size_t i = 0; i < s->ranking.size(); ++i) s->position[s->ranking[i].channel_id] = i;
    return s;
  }

  FeatureSpec spec() const { return config.creation_time_only ? FeatureSpec::creation_time() : FeatureSpec::full(); }

  json queue_entry(const RankedChannel& r, std::size_t rank) const {
    const auto& c = corpus.channels()[corpus_index.at(r.channel_id)];
    json groups = json::array();
    for (std::size_t k = 0; k < std::min<std::size_t>(3, r.attributions.size()); ++k)
      groups.push_back({{"group", std::string(to_string(r.attributions[k].group))},
                        {"contribution", r.attributions[k].contribution}});
    const auto latest = store.latest(r.channel_id);
    return json{{"rank", rank + 1},
                {"channel_id", r.channel_id},
                {"score", r.score},
                {"probability", r.probability},
                {"top_groups", groups},
                {"status", status_summary(c.status)},
                {"flags", r.flags},
                {"decision", latest ? std::string(to_string(latest->decision)) : "undecided"},
                {"decision_count", store.for_channel(r.channel_id).size()}};
  }

  void get_queue(const httplib::Request& req, httplib::Response& res) {
    std::size_t limit, offset;
    try {
      limit = std::min<std::size_t>(parse_size(req, "limit", 50), 1000);
      offset = parse_size(req, "offset", 0);
    } catch (const std::invalid_argument& e) {
      return send_error(res, 400, e.what());
    }
    const auto filter = req.has_param("filter") ? req.get_param_value("filter") : "all";
    if (filter != "all" && filter != "undecided" && filter != "decided")
      return send_error(res, 400, "filter must be all, undecided or decided");
    const auto s = current();
    if (!s)
      return send_error(res, 409, "no ranking loaded",
                        {{"hint", "train a model with `audit train`, set \"model\" in the service config and restart, "
                                  "or record decisions and POST /v1/retrain"}});
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < s->ranking.size(); ++i) {
      if (filter == "all") {
        idx.push_back(i);
        continue;
      }
      const bool decided = store.latest(s->ranking[i].channel_id).has_value();
      if ((filter == "decided") == decided) idx.push_back(i);
    }
    json entries = json::array();
    for (std::size_t k = offset; k < idx.size() && k < offset + limit; ++k) entries.push_back(queue_entry(s->ranking[idx[k]], idx[k]));
    res.set_header("X-Total-Count", std::to_string(idx.size()));
    send(res, 200,
         {{"total", idx.size()},
          {"offset", offset},
          {"limit", limit},
          {"filter", filter},
          {"model_version", s->version},
          {"severity", std::string(to_string(config.severity))},
          {"entries", entries}});
  }

  void get_channel(const std::string& id, httplib::Response& res) {
    auto it = corpus_index.find(id);
    if (it == corpus_index.end()) return send_error(res, 404, "unknown channel " + id);
    const auto& c = corpus.channels()[it->second];
    json decisions = json::array();
    for (const auto& d : store.for_channel(id)) decisions.push_back(to_json(d));
    json out{{"channel", to_json(c)},
             {"subscribers", subscribers_json(c)},
             {"status", to_json(c.status)},
             {"sentiment", to_json(analytics[it->second])},
             {"flags", missing_field_flags(c)},
             {"decisions", decisions}};
    if (const auto s = current()) {
      const auto& r = s->ranking[s->position.at(id)];
      const auto x = s->model->pipeline->transform(c, analytics[it->second]);
      json attr = json::array();
      for (const auto& a : r.attributions)
        attr.push_back({{"group", std::string(to_string(a.group))}, {"contribution", a.contribution}});
      out["model_version"] = s->version;
      out["rank"] = s->position.at(id) + 1;
      out["score"] = r.score;
      out["probability"] = r.probability;
      out["attributions"] = attr;
      out["features"] = {{"names", s->model->feature_names}, {"values", x}};
    } else {
      out["model_version"] = nullptr;
    }
    send(res, 200, out);
  }

  void post_decision(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    if (!corpus_index.contains(id)) return send_error(res, 404, "unknown channel " + id);
    ReviewDecision d;
    try {
      d = review_decision_from_json(json::parse(req.body));
      if (!d.channel_id.empty() && d.channel_id != id)
        throw std::invalid_argument("channel_id in body differs from the path");
      d.channel_id = id;
    } catch (const json::exception& e) {
      return send_error(res, 400, std::string("malformed JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
      return send_error(res, 400, e.what());
    }
    try {
      const auto r = store.put(d);
      auto stored = store.for_channel(id);
      for (const auto& s : stored)
        if (s.moderator_id == d.moderator_id) d = s;
      send(res, r == DecisionStore::PutResult::created ? 201 : 200, to_json(d));
    } catch (const std::invalid_argument& e) {
      send_error(res, 409, e.what());
    }
  }

  void run_job(int id, std::uint64_t seq) {
    {
      std::lock_guard lk(job_mu);
      jobs[id].state = "running";
    }
    Job result;
    try {
      const auto data = labeled_channels(corpus, analytics, store.label_overrides());
      json report;
      if (config.folds > 0) report = to_json(evaluate_corpus(data, spec(), config.kind, config.hyper, config.folds, config.seed));
      auto model = std::make_shared<TrainedModel>(trainer(data));
      if (!model->pipeline) throw ModelError("trainer returned a model without its feature pipeline");
      model->folds = config.folds;
      const auto old = current();
      auto next = build_snapshot(model, (old ? old->version : 0) + 1);
      if (!config.model.empty()) save_model(*model, config.model);
      {
        std::lock_guard lk(snap_mu);
        snap = next;
      }
      store.compact();
      result.state = "succeeded";
      result.model_version = next->version;
      result.report = std::move(report);
    } catch (const std::exception& e) {
      result.state = "failed";
      result.error = e.what();
    }
    std::lock_guard lk(job_mu);
    auto& j = jobs[id];
    j.state = result.state;
    j.error = result.error;
    j.model_version = result.model_version;
    j.report = std::move(result.report);
    j.finished = utc_timestamp();
    if (j.state == "succeeded") trained_seq = seq;
    running = false;
    job_cv.notify_all();
  }

  void post_retrain(httplib::Response& res) {
    std::lock_guard lk(job_mu);
    if (running) {
      int id = 0;
      for (const auto& [k, j] : jobs)
        if (j.state == "queued" || j.state == "running") id = k;
      return send_error(res, 409, "retrain already in progress", {{"job_id", id}});
    }
    const auto seq = store.sequence();
    const auto fresh = seq - trained_seq;
    if (fresh < config.retrain_min_decisions)
      return send_error(res, 409, "not enough new decisions to retrain",
                        {{"new_decisions", fresh}, {"required", config.retrain_min_decisions}});
    if (worker.joinable()) worker.join();
    const int id = next_job++;
    Job j;
    j.id = id;
    j.started = utc_timestamp();
    jobs[id] = j;
    running = true;
    worker = std::thread([this, id, seq] { run_job(id, seq); });
    send(res, 202, job_json(jobs[id]));
  }

  void get_job(const std::string& id_text, httplib::Response& res) {
    std::lock_guard lk(job_mu);
    int id = 0;
    try {
      id = std::stoi(id_text);
    } catch (const std::exception&) {
    }
    auto it = jobs.find(id);
    if (it == jobs.end()) return send_error(res, 404, "unknown job " + id_text);
    send(res, 200, job_json(it->second));
  }

  void routes() {
    svr.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (!config.token) return httplib::Server::HandlerResponse::Unhandled;
      if (req.get_header_value("Authorization") == "Bearer " + *config.token)
        return httplib::Server::HandlerResponse::Unhandled;
      send_error(res, 401, "missing or wrong bearer token");
      return httplib::Server::HandlerResponse::Handled;
    });
    svr.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      const auto s = current();
      send(res, 200, {{"status", "ok"}, {"channels", corpus.size()}, {"model_version", s ? json(s->version) : json(nullptr)}});
    });
    svr.Get("/v1/queue", [this](const httplib::Request& req, httplib::Response& res) { get_queue(req, res); });
    svr.Get(R"(/v1/channels/([^/]+))",
            [this](const httplib::Request& req, httplib::Response& res) { get_channel(req.matches[1], res); });
    svr.Post(R"(/v1/channels/([^/]+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
      post_decision(req.matches[1], req, res);
    });
    svr.Get("/v1/decisions", [this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& d : store.all()) out.push_back(to_json(d));
      send(res, 200, out);
    });
    svr.Get("/v1/decisions/export", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(store.export_labels_csv(), "text/csv");
    });
    svr.Post("/v1/retrain", [this](const httplib::Request&, httplib::Response& res) { post_retrain(res); });
    svr.Get(R"(/v1/jobs/(\d+))", [this](const httplib::Request& req, httplib::Response& res) { get_job(req.matches[1], res); });
    svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string msg = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        msg = e.what();
      } catch (...) {
      }
      send_error(res, 500, msg);
    });
  }
};

ReviewService::ReviewService(ServiceConfig config, Corpus corpus, std::optional<TrainedModel> model)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(corpus))) {
  auto& m = *impl_;
  for (std::size_t i = 0; i < m.corpus.size(); ++i) m.corpus_index[m.corpus.channels()[i].channel_id] = i;
  m.analytics = analyse_corpus(m.corpus);
  m.counts = disturbing_video_counts(m.corpus);
  m.trainer = [this](const LabeledChannels& data) {
    const auto& c = impl_->config;
    return train_corpus_model(data, impl_->spec(), c.kind, c.hyper, c.seed);
  };
  if (model) {
    if (!model->pipeline) throw ModelError("serving needs a model saved with its feature pipeline");
    m.snap = m.build_snapshot(std::make_shared<const TrainedModel>(std::move(*model)), 1);
  }
  m.routes();
}

std::unique_ptr<ReviewService> ReviewService::from_config(const ServiceConfig& config) {
  if (config.corpus.empty()) throw std::invalid_argument("service config needs a corpus path");
  auto corpus = load_corpus(config.corpus, config.corpus_format);
  std::optional<TrainedModel> model;
  if (!config.model.empty() && std::filesystem::exists(config.model)) model = load_model(config.model);
  return std::make_unique<ReviewService>(config, std::move(corpus), std::move(model));
}

ReviewService::~ReviewService() {
  stop();
  wait_for_jobs();
  if (impl_->worker.joinable()) impl_->worker.join();
}

void ReviewService::set_trainer(Trainer t) { impl_->trainer = std::move(t); }

int ReviewService::start(int port) {
  auto& m = *impl_;
  if (m.listener.joinable()) throw std::logic_error("service already running");
  if (port < 0) port = m.config.port;
  if (port == 0) {
    m.port = m.svr.bind_to_any_port(m.config.host);
  } else {
    if (!m.svr.bind_to_port(m.config.host, port)) throw std::runtime_error("cannot bind port " + std::to_string(port));
    m.port = port;
  }
  if (m.port <= 0) throw std::runtime_error("cannot bind service");
  m.listener = std::thread([&m] { m.svr.listen_after_bind(); });
  m.svr.wait_until_ready();
  return m.port;
}

void ReviewService::stop() {
  impl_->svr.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
}

void ReviewService::wait() {
  if (impl_->listener.joinable()) impl_->listener.join();
}

std::string ReviewService::endpoint() const { return "http://" + impl_->config.host + ":" + std::to_string(impl_->port); }

int ReviewService::model_version() const {
  const auto s = impl_->current();
  return s ? s->version : 0;
}

void ReviewService::wait_for_jobs() {
  std::unique_lock lk(impl_->job_mu);
  impl_->job_cv.wait(lk, [&] { return !impl_->running; });
}

}  // namespace chanaudit
