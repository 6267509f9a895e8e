#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "chanaudit/collector.hpp"
#include "chanaudit/service.hpp"
#include "chanaudit/stats.hpp"
#include "chanaudit/textlytics.hpp"

using namespace chanaudit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::function<void()> on_signal;

void handle_signal(int) {
  if (on_signal) on_signal();
}

void wait_for_signal(std::function<void()> stop) {
  on_signal = std::move(stop);
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
}

CorpusFormat corpus_format(const std::string& s) {
  auto f = parse_corpus_format(s);
  if (!f) throw CLI::ValidationError("--format", "expected jsonl or csv");
  return *f;
}

ModelKind model_kind(const std::string& s) {
  auto k = parse_model_kind(s);
  if (!k) throw CLI::ValidationError("--kind", "unknown model kind " + s);
  return *k;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return json::parse(in);
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.empty() || p == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(p);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

void write_corpus(const Corpus& c, const fs::path& p) {
  if (p.empty() || p == "-") {
    write_jsonl(c, std::cout);
    return;
  }
  save_corpus(c, p);
}

FeatureMatrix read_matrix(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return read_matrix_csv(in);
}

FeatureMatrix labelled_only(const FeatureMatrix& m) {
  FeatureMatrix out;
  out.names = m.names;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.labels[i] == 0 || m.labels[i] == 1) {
      out.rows.push_back(m.rows[i]);
      out.labels.push_back(m.labels[i]);
      out.channel_ids.push_back(m.channel_ids[i]);
    }
  return out;
}

FeatureSpec load_spec(const std::string& path, bool creation_time) {
  FeatureSpec s = path.empty() ? FeatureSpec::full() : feature_spec_from_json(read_json(path));
  if (creation_time) s = FeatureSpec::creation_time();
  s.validate();
  return s;
}

Hyperparams load_hyper(const std::string& path) { return path.empty() ? Hyperparams{} : hyperparams_from_json(read_json(path)); }

struct Options {
  std::string in, out, format = "jsonl", corpus, corpus_format = "jsonl", spec, matrix, model, report, kind = "rf",
                   hyper, config, ids, endpoint, fixtures, emotions, severity = "prob", mode = "full", labels;
  int delay_ms = 1000, settle_ms = 2000, concurrency = 1, folds = 10, port = 0, retries = 2;
  std::uint64_t seed = 7;
  std::size_t channels = 1400, post_limit = 100;
  bool creation_time = false, allow_remote = false, predictions = false;
};

Corpus load(const Options& o) { return load_corpus(o.corpus, corpus_format(o.corpus_format)); }

void run_ingest(const Options& o) {
  auto c = load_corpus(o.in, corpus_format(o.format));
  auto prop = propagate_labels(c);
  for (const auto& w : prop.warnings) std::cerr << "warning: " << w << '\n';
  write_corpus(c, o.out);
  std::cerr << c.size() << " channels, " << prop.labels.size() << " labelled, " << prop.excluded.size()
            << " without usable videos\n";
}

void run_crawl(const Options& o) {
  std::vector<std::string> ids;
  {
    std::ifstream in(o.ids);
    if (!in) throw std::runtime_error("cannot open " + o.ids);
    for (std::string line; std::getline(in, line);) {
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
      if (!line.empty() && line[0] != '#') ids.push_back(line);
    }
  }
  FetchPolicy policy;
  policy.min_inter_request_delay = Millis{o.delay_ms};
  policy.page_settle_delay = Millis{o.settle_ms};
  policy.max_concurrent_requests = o.concurrency;
  policy.retries = o.retries;
  policy.validate();
  auto limiter = std::make_shared<RateLimiter>(policy);
  std::unique_ptr<Client> client;
  if (!o.fixtures.empty())
    client = std::make_unique<FixtureClient>(o.fixtures, limiter);
  else
    client = std::make_unique<HttpClient>(o.endpoint, limiter, o.allow_remote);
  CrawlRequest req;
  req.channel_ids = ids;
  req.post_limit = o.post_limit;
  auto result = crawl(*client, req, policy);
  for (const auto& f : result.failures) std::cerr << "failed " << f.channel_id << ": " << f.error << '\n';
  write_corpus(result.corpus, o.out);
  std::cerr << result.corpus.size() << " channels fetched, " << result.failures.size() << " failed\n";
}

void run_mock_server(const Options& o) {
  MockServer server;
  if (!o.fixtures.empty()) server.add_directory(o.fixtures);
  if (!o.corpus.empty())
    for (const auto& c : load(o).channels()) add_channel_routes(server, c);
  const int port = server.start(o.port);
  std::cout << "listening on " << server.endpoint() << std::endl;
  (void)port;
  wait_for_signal([&] { server.stop(); });
  server.wait();
}

AnalyticsContext analytics_context(const Options& o) {
  AnalyticsContext ctx;
  if (!o.emotions.empty()) ctx.emotions = std::make_shared<HttpEmotionProvider>(o.emotions);
  return ctx;
}

void run_sentiment(const Options& o) {
  auto c = load(o);
  auto an = analyse_corpus(c, analytics_context(o));
  std::ostringstream out;
  for (const auto& a : an) out << to_json(a).dump() << '\n';
  write_text(o.out, out.str());
}

void run_features(const Options& o) {
  auto c = load(o);
  auto an = analyse_corpus(c, analytics_context(o));
  const auto spec = load_spec(o.spec, o.creation_time);
  auto prop = propagate_labels(c);
  std::vector<const ChannelRecord*> cs;
  std::vector<const ChannelAnalytics*> as;
  std::vector<int> ys;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& ch = c.channels()[i];
    cs.push_back(&ch);
    as.push_back(&an[i]);
    auto it = prop.labels.find(ch.channel_id);
    ys.push_back(it == prop.labels.end() ? -1 : static_cast<int>(it->second.value));
  }
  auto pipe = FeaturePipeline::fit(cs, as, spec);
  auto m = pipe.transform(cs, as, ys);
  std::ostringstream out;
  write_matrix_csv(m, out);
  write_text(o.out, out.str());
  for (const auto& d : pipe.prep.dropped) std::cerr << "dropped " << d.name << " (variance " << d.variance << ")\n";
  std::cerr << m.size() << " rows, " << m.cols() << " features\n";
}

void run_stats(const Options& o) {
  json rows = json::array();
  if (!o.corpus.empty()) {
    for (const auto& r : ks_count_table(load(o))) rows.push_back(to_json(r));
  } else {
    const auto m = labelled_only(read_matrix(o.matrix));
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (!is_activity_feature(m.names[j])) continue;
      std::vector<double> a, b;
      for (std::size_t i = 0; i < m.size(); ++i) (m.labels[i] ? b : a).push_back(m.rows[i][j]);
      KSRow r;
      r.feature = m.names[j];
      r.result = ks_two_sample(a, b);
      for (double v : a) r.mean_suitable += v / a.size();
      for (double v : b) r.mean_disturbing += v / b.size();
      rows.push_back(to_json(r));
    }
  }
  write_json(o.report, rows);
}

void run_rank(const Options& o) {
  if (!o.model.empty()) {
    if (o.corpus.empty()) throw CLI::ValidationError("--corpus", "required with --model");
    auto model = load_model(o.model);
    auto c = load(o);
    auto an = analyse_corpus(c, analytics_context(o));
    auto sev = parse_severity(o.severity);
    if (!sev) throw CLI::ValidationError("--severity", "expected prob or prob_times_count");
    json out = json::array();
    for (const auto& r : rank_channels(model, c, an, *sev, disturbing_video_counts(c))) out.push_back(to_json(r));
    write_json(o.out, out);
    return;
  }
  if (o.matrix.empty()) throw CLI::ValidationError("rank", "give --matrix for attribute ranking or --model and --corpus");
  const auto m = labelled_only(read_matrix(o.matrix));
  json out = json::array();
  for (const auto& r : info_gain_rank(m.rows, m.labels, m.names, o.folds, o.seed)) out.push_back(to_json(r));
  write_json(o.out, out);
}

void run_train(const Options& o) {
  const auto kind = model_kind(o.kind);
  const auto h = load_hyper(o.hyper);
  TrainedModel model;
  if (!o.corpus.empty()) {
    auto c = load(o);
    auto an = analyse_corpus(c, analytics_context(o));
    model = train_corpus_model(labeled_channels(c, an), load_spec(o.spec, o.creation_time), kind, h, o.seed);
  } else {
    model = train_model(kind, read_matrix(o.matrix), h, o.seed);
  }
  save_model(model, o.out);
  std::cerr << to_string(kind) << " on " << model.feature_names.size() << " features -> " << o.out << '\n';
}

void run_eval(const Options& o) {
  const auto kind = model_kind(o.kind);
  const auto h = load_hyper(o.hyper);
  json out;
  if (!o.corpus.empty()) {
    auto c = load(o);
    auto an = analyse_corpus(c, analytics_context(o));
    out = to_json(evaluate_corpus(labeled_channels(c, an), load_spec(o.spec, o.creation_time), kind, h, o.folds, o.seed),
                  o.predictions);
  } else {
    const auto m = labelled_only(read_matrix(o.matrix));
    out = to_json(evaluate_cv(kind, m.rows, m.labels, h, o.folds, o.seed), o.predictions);
  }
  out["kind"] = std::string(to_string(kind));
  out["folds"] = o.folds;
  out["seed"] = o.seed;
  write_json(o.out, out);
}

void run_serve(const Options& o) {
  auto cfg = load_service_config(o.config);
  if (o.port) cfg.port = o.port;
  auto svc = ReviewService::from_config(cfg);
  svc->start();
  std::cout << "serving on " << svc->endpoint() << " (model version " << svc->model_version() << ")" << std::endl;
  wait_for_signal([&] { svc->stop(); });
  svc->wait();
}

void run_synth(const Options& o) {
  SynthOptions s;
  s.channels = o.channels;
  s.seed = o.seed;
  if (o.mode == "creation_only")
    s.mode = SignalMode::creation_only;
  else if (o.mode != "full")
    throw CLI::ValidationError("--mode", "expected full or creation_only");
  write_corpus(synth_corpus(s), o.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel audit toolkit"};
  app.require_subcommand(1);
  Options o;

  auto corpus_opts = [&](CLI::App* s, bool required) {
    auto* opt = s->add_option("--corpus", o.corpus, "Corpus path");
    if (required) opt->required();
    s->add_option("--corpus-format", o.corpus_format, "jsonl or csv");
  };
  auto model_opts = [&](CLI::App* s) {
    s->add_option("--kind", o.kind, "rf, lr, nb, mlp, logitboost, avgprob or brf");
    s->add_option("--hyper", o.hyper, "Hyperparameter JSON file");
    s->add_option("--seed", o.seed, "Random seed");
    s->add_option("--spec", o.spec, "Feature spec JSON (corpus input)");
    s->add_flag("--creation-time", o.creation_time, "Creation-time features only (corpus input)");
  };

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and write it as JSONL");
  ingest->add_option("--in", o.in, "Input file or CSV bundle directory")->required();
  ingest->add_option("--format", o.format, "jsonl or csv");
  ingest->add_option("--out", o.out, "Output JSONL");
  ingest->callback([&] { run_ingest(o); });

  auto* crawl_cmd = app.add_subcommand("crawl", "Fetch channels into a corpus");
  crawl_cmd->add_option("--ids", o.ids, "File with one channel id per line")->required();
  auto* ep = crawl_cmd->add_option("--endpoint", o.endpoint, "Base URL, e.g. http://127.0.0.1:8081");
  auto* fx = crawl_cmd->add_option("--fixtures", o.fixtures, "Read pages from a fixture directory");
  ep->excludes(fx);
  crawl_cmd->add_option("--delay-ms", o.delay_ms, "Minimum gap between requests to a host");
  crawl_cmd->add_option("--settle-ms", o.settle_ms, "Wait after loading a dynamic page");
  crawl_cmd->add_option("--concurrency", o.concurrency, "Concurrent requests per host");
  crawl_cmd->add_option("--retries", o.retries, "Retries per page");
  crawl_cmd->add_option("--post-limit", o.post_limit, "Posts per channel");
  crawl_cmd->add_flag("--i-understand-tos", o.allow_remote, "Allow non-local endpoints");
  crawl_cmd->add_option("--out", o.out, "Output JSONL");
  crawl_cmd->callback([&] {
    if (o.endpoint.empty() && o.fixtures.empty()) throw CLI::RequiredError("--endpoint or --fixtures");
    run_crawl(o);
  });

  auto* mock = app.add_subcommand("mock-server", "Serve fixture pages over HTTP");
  mock->add_option("--fixtures", o.fixtures, "Fixture directory");
  corpus_opts(mock, false);
  mock->add_option("--port", o.port, "Port, 0 for any");
  mock->callback([&] { run_mock_server(o); });

  auto* sentiment = app.add_subcommand("sentiment", "Polarity, emotions and emoji scores per channel");
  corpus_opts(sentiment, true);
  sentiment->add_option("--emotions-endpoint", o.emotions, "HTTP emotion provider");
  sentiment->add_option("--out", o.out, "Output JSONL");
  sentiment->callback([&] { run_sentiment(o); });

  auto* features = app.add_subcommand("features", "Build the feature matrix");
  corpus_opts(features, true);
  features->add_option("--spec", o.spec, "Feature spec JSON");
  features->add_flag("--creation-time", o.creation_time, "Creation-time features only");
  features->add_option("--emotions-endpoint", o.emotions, "HTTP emotion provider");
  features->add_option("--out", o.out, "Output CSV");
  features->callback([&] { run_features(o); });

  auto* stats = app.add_subcommand("stats", "Two-sample KS tests on count characteristics");
  stats->add_option("--matrix", o.matrix, "Feature matrix CSV");
  corpus_opts(stats, false);
  stats->add_option("--report", o.report, "Output JSON");
  stats->callback([&] {
    if (o.matrix.empty() && o.corpus.empty()) throw CLI::RequiredError("--matrix or --corpus");
    run_stats(o);
  });

  auto* rank = app.add_subcommand("rank", "Rank attributes by information gain, or channels by a model");
  rank->add_option("--matrix", o.matrix, "Feature matrix CSV (attribute ranking)");
  rank->add_option("--model", o.model, "Model file (channel ranking)");
  corpus_opts(rank, false);
  rank->add_option("--severity", o.severity, "prob or prob_times_count");
  rank->add_option("--folds", o.folds, "Folds for attribute ranking");
  rank->add_option("--seed", o.seed, "Random seed");
  rank->add_option("--out", o.out, "Output JSON");
  rank->callback([&] { run_rank(o); });

  auto* train = app.add_subcommand("train", "Fit a classifier and save it");
  train->add_option("--matrix", o.matrix, "Feature matrix CSV");
  corpus_opts(train, false);
  model_opts(train);
  train->add_option("--out", o.out, "Model file")->required();
  train->callback([&] {
    if (o.matrix.empty() == o.corpus.empty()) throw CLI::ValidationError("train", "give exactly one of --matrix, --corpus");
    run_train(o);
  });

  auto* eval = app.add_subcommand("eval", "Stratified k-fold evaluation");
  eval->add_option("--matrix", o.matrix, "Feature matrix CSV");
  corpus_opts(eval, false);
  model_opts(eval);
  eval->add_option("--folds", o.folds, "Folds");
  eval->add_flag("--predictions", o.predictions, "Include out-of-fold predictions");
  eval->add_option("--out", o.out, "Output JSON");
  eval->callback([&] {
    if (o.matrix.empty() == o.corpus.empty()) throw CLI::ValidationError("eval", "give exactly one of --matrix, --corpus");
    run_eval(o);
  });

  auto* serve = app.add_subcommand("serve", "Run the review service");
  serve->add_option("--config", o.config, "Service config JSON")->required();
  serve->add_option("--port", o.port, "Override the configured port");
  serve->callback([&] { run_serve(o); });

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
  synth->add_option("--channels", o.channels, "Channel count");
  synth->add_option("--mode", o.mode, "full or creation_only");
  synth->add_option("--seed", o.seed, "Random seed");
  synth->add_option("--out", o.out, "Output JSONL");
  synth->callback([&] { run_synth(o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "audit: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
