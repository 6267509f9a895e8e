#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "internal.hpp"

namespace chanaudit {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "chanaudit-model";

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ModelKind kind_from(const json& j) {
  const auto s = j.get<std::string>();
  auto k = parse_model_kind(s);
  if (!k) throw ModelError("unknown model kind: " + s);
  return *k;
}

}  // namespace

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::logistic_regression: return "logistic_regression";
    case ModelKind::naive_bayes: return "naive_bayes";
    case ModelKind::mlp: return "mlp";
    case ModelKind::logitboost_meta: return "logitboost_meta";
    case ModelKind::avgprob_ensemble: return "avgprob_ensemble";
    case ModelKind::bagged_random_forest: return "bagged_random_forest";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  static const std::pair<std::string_view, ModelKind> aliases[] = {
      {"rf", ModelKind::random_forest},           {"lr", ModelKind::logistic_regression},
      {"nb", ModelKind::naive_bayes},             {"logitboost", ModelKind::logitboost_meta},
      {"avgprob", ModelKind::avgprob_ensemble},   {"brf", ModelKind::bagged_random_forest},
  };
  for (const auto& [a, k] : aliases)
    if (s == a) return k;
  for (auto k : {ModelKind::random_forest, ModelKind::logistic_regression, ModelKind::naive_bayes, ModelKind::mlp,
                 ModelKind::logitboost_meta, ModelKind::avgprob_ensemble, ModelKind::bagged_random_forest})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

json to_json(const Hyperparams& h) {
  json members = json::array();
  for (auto k : h.ensemble.members) members.push_back(std::string(to_string(k)));
  return json{
      {"rf", {{"trees", h.rf.trees}, {"mtry", h.rf.mtry}, {"max_depth", h.rf.max_depth}, {"min_leaf", h.rf.min_leaf}}},
      {"lr", {{"l2", h.lr.l2}, {"max_iter", h.lr.max_iter}}},
      {"nb", {{"min_std", h.nb.min_std}}},
      {"mlp",
       {{"hidden", h.mlp.hidden},
        {"epochs", h.mlp.epochs},
        {"learning_rate", h.mlp.learning_rate},
        {"momentum", h.mlp.momentum},
        {"l2", h.mlp.l2},
        {"batch", h.mlp.batch}}},
      {"boost",
       {{"rounds", h.boost.rounds},
        {"depth", h.boost.depth},
        {"base", h.boost.base},
        {"base_trees", h.boost.base_trees},
        {"shrinkage", h.boost.shrinkage},
        {"z_max", h.boost.z_max}}},
      {"ensemble", {{"members", members}, {"bags", h.ensemble.bags}, {"bag_trees", h.ensemble.bag_trees}}}};
}

Hyperparams hyperparams_from_json(const json& j) {
  Hyperparams h;
  if (!j.is_object()) throw ModelError("hyperparameters must be an object");
  auto get = [&](const char* sec, const char* key, auto& out) {
    if (j.contains(sec) && j.at(sec).contains(key)) out = j.at(sec).at(key).get<std::decay_t<decltype(out)>>();
  };
  get("rf", "trees", h.rf.trees);
  get("rf", "mtry", h.rf.mtry);
  get("rf", "max_depth", h.rf.max_depth);
  get("rf", "min_leaf", h.rf.min_leaf);
  get("lr", "l2", h.lr.l2);
  get("lr", "max_iter", h.lr.max_iter);
  get("nb", "min_std", h.nb.min_std);
  get("mlp", "hidden", h.mlp.hidden);
  get("mlp", "epochs", h.mlp.epochs);
  get("mlp", "learning_rate", h.mlp.learning_rate);
  get("mlp", "momentum", h.mlp.momentum);
  get("mlp", "l2", h.mlp.l2);
  get("mlp", "batch", h.mlp.batch);
  get("boost", "rounds", h.boost.rounds);
  get("boost", "depth", h.boost.depth);
  get("boost", "base", h.boost.base);
  get("boost", "base_trees", h.boost.base_trees);
  get("boost", "shrinkage", h.boost.shrinkage);
  get("boost", "z_max", h.boost.z_max);
  get("ensemble", "bags", h.ensemble.bags);
  get("ensemble", "bag_trees", h.ensemble.bag_trees);
  if (j.contains("ensemble") && j.at("ensemble").contains("members")) {
    h.ensemble.members.clear();
    for (const auto& m : j.at("ensemble").at("members")) h.ensemble.members.push_back(kind_from(m));
  }
  return h;
}

std::array<double, 2> Classifier::predict_proba(const std::vector<double>& x) const {
  const double p = predict(x);
  return {1.0 - p, p};
}

std::unique_ptr<Classifier> train(ModelKind kind, const Rows& x, const std::vector<int>& y, const Hyperparams& h,
                                  std::uint64_t seed) {
  const TreeParams tp{h.rf.max_depth, h.rf.min_leaf, h.rf.mtry};
  switch (kind) {
    case ModelKind::random_forest: return RandomForest::train(x, y, h.rf.trees, tp, seed);
    case ModelKind::logistic_regression: return LogisticRegression::train(x, y, h.lr.l2, h.lr.max_iter);
    case ModelKind::naive_bayes: return NaiveBayes::train(x, y, h.nb.min_std);
    case ModelKind::mlp: return MLP::train(x, y, h, seed);
    case ModelKind::logitboost_meta: return LogitBoost::train(x, y, h, seed);
    case ModelKind::avgprob_ensemble: return AvgProb::train(x, y, h, seed);
    case ModelKind::bagged_random_forest:
      return BaggedForest::train(x, y, h.ensemble.bags, h.ensemble.bag_trees, tp, seed);
  }
  throw ModelError("unknown model kind");
}

std::unique_ptr<Classifier> classifier_from_json(const json& j) {
  switch (kind_from(j.at("kind"))) {
    case ModelKind::random_forest: return RandomForest::from_json(j);
    case ModelKind::logistic_regression: return LogisticRegression::from_json(j);
    case ModelKind::naive_bayes: return NaiveBayes::from_json(j);
    case ModelKind::mlp: return MLP::from_json(j);
    case ModelKind::logitboost_meta: return LogitBoost::from_json(j);
    case ModelKind::avgprob_ensemble: return AvgProb::from_json(j);
    case ModelKind::bagged_random_forest: return BaggedForest::from_json(j);
  }
  throw ModelError("unknown model kind");
}

TrainedModel train_model(ModelKind kind, const FeatureMatrix& m, const Hyperparams& h, std::uint64_t seed) {
  Rows x;
  std::vector<int> y;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.labels[i] >= 0) {
      x.push_back(m.rows[i]);
      y.push_back(m.labels[i]);
    }
  TrainedModel t;
  t.kind = kind;
  t.hyper = h;
  t.classifier = train(kind, x, y, h, seed);
  t.feature_names = m.names;
  t.feature_means.assign(m.cols(), 0.0);
  for (const auto& r : x)
    for (std::size_t j = 0; j < r.size(); ++j) t.feature_means[j] += r[j] / static_cast<double>(x.size());
  t.seed = seed;
  t.trained_at = utc_now();
  return t;
}

json to_json(const TrainedModel& m) {
  json j{{"format", kFormat},
         {"version", kModelFormatVersion},
         {"kind", std::string(to_string(m.kind))},
         {"hyper", to_json(m.hyper)},
         {"classifier", m.classifier->to_json()},
         {"feature_names", m.feature_names},
         {"feature_means", m.feature_means},
         {"seed", m.seed},
         {"folds", m.folds},
         {"trained_at", m.trained_at}};
  if (m.pipeline) j["pipeline"] = to_json(*m.pipeline);
  return j;
}

TrainedModel trained_model_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != kFormat) throw ModelError("not a model file");
    const int v = j.at("version").get<int>();
    if (v != kModelFormatVersion)
      throw ModelError("model format version " + std::to_string(v) + " is not supported (expected " +
                       std::to_string(kModelFormatVersion) + ")");
    TrainedModel m;
    m.kind = kind_from(j.at("kind"));
    m.hyper = hyperparams_from_json(j.at("hyper"));
    m.classifier = classifier_from_json(j.at("classifier"));
    if (m.classifier->kind() != m.kind) throw ModelError("classifier kind differs from model kind");
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.feature_means = j.at("feature_means").get<std::vector<double>>();
    if (m.feature_names.size() != m.classifier->input_size() || m.feature_means.size() != m.feature_names.size())
      throw ModelError("feature list does not match the classifier");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.folds = j.value("folds", 0);
    m.trained_at = j.value("trained_at", "");
    if (j.contains("pipeline")) {
      m.pipeline = feature_pipeline_from_json(j.at("pipeline"));
      if (m.pipeline->names() != m.feature_names) throw ModelError("pipeline features differ from model features");
    }
    return m;
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model: ") + e.what());
  }
}

void save_model(const TrainedModel& m, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ModelError("cannot write " + tmp);
    out << to_json(m).dump() << '\n';
    if (!out) throw ModelError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ModelError("model file " + path.string() + " is truncated or not JSON: " + e.what());
  }
  return trained_model_from_json(j);
}

}  // namespace chanaudit
