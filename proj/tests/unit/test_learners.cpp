#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "chanaudit/learners.hpp"

using namespace chanaudit;

namespace {

struct Toy {
  Rows x;
  std::vector<int> y;
};

// Two noisy Gaussian blobs; class 1 shifted by `shift` in the first two features.
Toy blobs(std::size_t n, std::size_t d, double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Toy t;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    std::vector<double> r(d);
    for (std::size_t j = 0; j < d; ++j) r[j] = nd(rng) + (j < 2 && c ? shift : 0.0);
    t.x.push_back(r);
    t.y.push_back(c);
  }
  return t;
}

class Fixed : public Classifier {
 public:
  explicit Fixed(double p) : p_(p) {}
  ModelKind kind() const override { return ModelKind::random_forest; }
  std::size_t input_size() const override { return 1; }
  double predict(const std::vector<double>&) const override { return p_; }
  nlohmann::json to_json() const override { return {}; }

 private:
  double p_;
};

double accuracy(const Classifier& m, const Toy& t) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < t.x.size(); ++i) ok += (m.predict(t.x[i]) > 0.5) == (t.y[i] == 1);
  return double(ok) / double(t.x.size());
}

}  // namespace

TEST_CASE("logistic regression separates a separable set") {
  Toy t;
  for (int i = 0; i < 20; ++i) {
    t.x.push_back({double(i), double(i % 3)});
    t.y.push_back(i >= 10);
  }
  auto m = LogisticRegression::train(t.x, t.y, 1.0, 100);
  CHECK(accuracy(*m, t) == 1.0);
  CHECK(m->weights()[0] > 0);
}

TEST_CASE("training rejects bad inputs") {
  Rows x = {{1}, {2}, {3}};
  CHECK_THROWS_AS(train(ModelKind::random_forest, x, {1, 1, 1}, {}, 1), ModelError);
  CHECK_THROWS_AS(train(ModelKind::naive_bayes, {{1}, {NAN}}, {0, 1}, {}, 1), ModelError);
  CHECK_THROWS_AS(train(ModelKind::logistic_regression, {{1}, {2, 3}}, {0, 1}, {}, 1), ModelError);
}

TEST_CASE("random forest is deterministic for a seed") {
  auto t = blobs(20, 3, 2.0, 5);
  Hyperparams h;
  h.rf.trees = 15;
  auto a = train(ModelKind::random_forest, t.x, t.y, h, 42);
  auto b = train(ModelKind::random_forest, t.x, t.y, h, 42);
  auto c = train(ModelKind::random_forest, t.x, t.y, h, 43);
  CHECK(a->to_json().dump() == b->to_json().dump());
  CHECK(a->to_json().dump() != c->to_json().dump());
}

TEST_CASE("every model kind learns blobs") {
  auto t = blobs(200, 4, 2.5, 11);
  Hyperparams h;
  h.rf.trees = 30;
  h.mlp.hidden = 16;
  h.mlp.epochs = 30;
  h.boost.rounds = 20;
  h.ensemble.bags = 3;
  h.ensemble.bag_trees = 10;
  for (auto k : {ModelKind::random_forest, ModelKind::logistic_regression, ModelKind::naive_bayes, ModelKind::mlp,
                 ModelKind::logitboost_meta, ModelKind::avgprob_ensemble, ModelKind::bagged_random_forest}) {
    CAPTURE(to_string(k));
    auto m = train(k, t.x, t.y, h, 3);
    CHECK(m->kind() == k);
    CHECK(accuracy(*m, t) > 0.85);
    auto pr = m->predict_proba(t.x[0]);
    CHECK(pr[0] + pr[1] == doctest::Approx(1.0));
    CHECK(pr[1] >= 0.0);
    CHECK(pr[1] <= 1.0);
  }
  h.boost.base = "forest";
  auto boosted_forest = train(ModelKind::logitboost_meta, t.x, t.y, h, 3);
  CHECK(accuracy(*boosted_forest, t) > 0.85);
}

TEST_CASE("average probability ensemble") {
  AvgProb e({std::make_shared<Fixed>(0.2), std::make_shared<Fixed>(0.8)});
  CHECK(e.predict({0.0}) == 0.5);
  AvgProb e3({std::make_shared<Fixed>(0.1), std::make_shared<Fixed>(0.3), std::make_shared<Fixed>(0.35)});
  CHECK(e3.predict({0.0}) == (0.1 + 0.3 + 0.35) / 3);
}

TEST_CASE("weighted metrics on a balanced confusion matrix") {
  Confusion c{3, 1, 1, 3};
  auto w = weighted_metrics(c);
  CHECK(w.precision == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(w.recall == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(w.f1 == doctest::Approx(0.75).epsilon(1e-12));
  auto pc = per_class_metrics(Confusion{5, 2, 1, 9});
  CHECK(pc[1].recall == pc[1].tp_rate);
  CHECK(pc[1].fp_rate == doctest::Approx(1 - pc[0].recall).epsilon(1e-15));
  CHECK(pc[0].fp_rate == doctest::Approx(1 - pc[1].recall).epsilon(1e-15));
  auto none = per_class_metrics(Confusion{0, 4, 0, 4});
  CHECK(none[1].precision == 0.0);
  CHECK(none[1].f1 == 0.0);
}

TEST_CASE("perfect predictor") {
  std::vector<int> y = {0, 1, 0, 1, 1};
  std::vector<double> p = {0.1, 0.9, 0.2, 0.7, 0.8};
  auto r = evaluate_predictions(y, p);
  CHECK(r.auc == 1.0);
  CHECK(r.weighted.f1 == 1.0);
}

TEST_CASE("rank and trapezoid AUC agree") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = int(rng() % 2);
      s[i] = double(rng() % 10) / 10.0;
    }
    y[0] = 0;
    y[1] = 1;
    CHECK(auc_rank(y, s) == doctest::Approx(auc_trapezoid(y, s)).epsilon(1e-9));
  }
  CHECK(auc_rank({0, 1}, {0.5, 0.5}) == 0.5);
}

TEST_CASE("network gradient matches finite differences") {
  MLP net(4, 6, 17);
  auto t = blobs(5, 4, 1.0, 2);
  const double l2 = 0.01;
  std::vector<double> g;
  net.loss(t.x, t.y, l2, &g);
  auto& p = net.params();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double h = 1e-5, keep = p[k];
    p[k] = keep + h;
    const double up = net.loss(t.x, t.y, l2, nullptr);
    p[k] = keep - h;
    const double down = net.loss(t.x, t.y, l2, nullptr);
    p[k] = keep;
    const double fd = (up - down) / (2 * h);
    CAPTURE(k);
    CHECK(std::abs(fd - g[k]) <= 1e-4 * std::max(1e-3, std::abs(fd)));
  }
}

TEST_CASE("boosting loss never rises") {
  auto t = blobs(150, 5, 1.0, 21);
  Hyperparams h;
  h.boost.rounds = 40;
  auto m = LogitBoost::train(t.x, t.y, h, 1);
  const auto& loss = m->loss_history();
  REQUIRE(loss.size() > 2);
  for (std::size_t i = 1; i < loss.size(); ++i) CHECK(loss[i] <= loss[i - 1]);
  CHECK(loss.back() < loss.front());
}

TEST_CASE("cross-validation partitions") {
  auto t = blobs(57, 3, 2.0, 4);
  t.y[0] = 1;
  t.y[2] = 1;
  Hyperparams h;
  h.rf.trees = 10;
  auto r = evaluate_cv(ModelKind::random_forest, t.x, t.y, h, 10, 7);
  REQUIRE(r.fold_of.size() == t.y.size());
  const double ones = double(std::count(t.y.begin(), t.y.end(), 1));
  for (int f = 0; f < 10; ++f) {
    double n = 0, pos = 0;
    for (std::size_t i = 0; i < t.y.size(); ++i)
      if (r.fold_of[i] == f) {
        n += 1;
        pos += t.y[i];
      }
    CHECK(std::abs(pos - n * ones / double(t.y.size())) <= 1.0);
  }
  CHECK(r.confusion.total() == t.y.size());
  CHECK(r.folds.size() == 10);
  CHECK(r.auc > 0.8);
  std::vector<int> few = {0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  Rows fx(few.size(), std::vector<double>{1.0});
  CHECK_THROWS_AS(evaluate_cv(ModelKind::random_forest, fx, few, h, 10, 7), ModelError);
}

TEST_CASE("model files round trip") {
  auto t = blobs(60, 3, 2.0, 9);
  FeatureMatrix m;
  m.names = {"a", "b", "c"};
  m.rows = t.x;
  m.labels = t.y;
  for (std::size_t i = 0; i < t.x.size(); ++i) m.channel_ids.push_back("UC" + std::to_string(i));
  Hyperparams h;
  h.rf.trees = 20;
  const auto dir = std::filesystem::temp_directory_path();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (auto k : {ModelKind::random_forest, ModelKind::logitboost_meta, ModelKind::mlp, ModelKind::avgprob_ensemble}) {
    h.mlp.hidden = 8;
    h.mlp.epochs = 5;
    h.ensemble.bags = 2;
    auto tm = train_model(k, m, h, 5);
    const auto path = dir / "chanaudit_model.json";
    save_model(tm, path);
    auto back = load_model(path);
    CHECK(back.kind == k);
    CHECK(back.feature_names == m.names);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> x = {nd(rng) * 3, nd(rng) * 3, nd(rng) * 3};
      CHECK(back.predict(x) == tm.predict(x));
    }
  }
  auto tm = train_model(ModelKind::random_forest, m, h, 5);
  const auto path = dir / "chanaudit_model_bad.json";
  const auto text = to_json(tm).dump();
  std::ofstream(path) << text.substr(0, text.size() / 2);
  CHECK_THROWS_AS(load_model(path), ModelError);
  auto j = to_json(tm);
  j["version"] = 2;
  std::ofstream(path) << j.dump();
  try {
    load_model(path);
    FAIL("expected a version error");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  CHECK_THROWS_AS(load_model(dir / "chanaudit_no_such_model.json"), ModelError);
}

TEST_CASE("hyperparameters and kinds parse") {
  Hyperparams h;
  h.rf.trees = 7;
  h.boost.base = "forest";
  h.ensemble.members = {ModelKind::naive_bayes};
  auto back = hyperparams_from_json(to_json(h));
  CHECK(back.rf.trees == 7);
  CHECK(back.boost.base == "forest");
  CHECK(back.ensemble.members == std::vector<ModelKind>{ModelKind::naive_bayes});
  CHECK(hyperparams_from_json(nlohmann::json::object()).rf.trees == 100);
  CHECK(parse_model_kind("rf") == ModelKind::random_forest);
  CHECK(parse_model_kind("logitboost_meta") == ModelKind::logitboost_meta);
  CHECK_FALSE(parse_model_kind("svm"));
}
