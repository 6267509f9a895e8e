#include <algorithm>
#include <cmath>

#include "internal.hpp"

namespace chanaudit {

using nlohmann::json;

namespace {

double log_loss(const std::vector<int>& y, const std::vector<double>& F) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    // p = sigmoid(2F); -log p = log(1 + exp(-2F))
    const double m = y[i] ? -2 * F[i] : 2 * F[i];
    s += m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
  }
  return s / static_cast<double>(y.size());
}

}  // namespace

std::unique_ptr<LogitBoost> LogitBoost::train(const Rows& x, const std::vector<int>& y, const Hyperparams& h,
                                              std::uint64_t seed) {
  detail::check_training_set(x, y);
  const auto& c = h.boost;
  if (c.rounds < 1 || c.depth < 1 || !(c.shrinkage > 0) || !(c.z_max > 0)) throw ModelError("invalid boosting settings");
  if (c.base != "tree" && c.base != "forest") throw ModelError("boosting base must be tree or forest");
  if (c.base == "forest" && c.base_trees < 1) throw ModelError("forest base needs at least one tree");
  auto m = std::make_unique<LogitBoost>();
  m->inputs_ = x[0].size();
  const auto n = x.size();
  std::vector<double> F(n, 0.0), z(n), w(n), f(n), next(n);
  m->loss_.push_back(log_loss(y, F));
  TreeParams tp;
  tp.max_depth = c.depth;
  if (c.base == "forest") tp.mtry = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(m->inputs_)))));
  for (int r = 0; r < c.rounds; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-2 * F[i]));
      w[i] = std::max(p * (1 - p), 1e-12);
      z[i] = std::clamp((y[i] - p) / w[i], -c.z_max, c.z_max);
    }
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    Round round;
    if (c.base == "tree") {
      round.trees.push_back(RegressionTree::fit(x, z, w, tp, rng));
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (int t = 0; t < c.base_trees; ++t) {
        std::vector<double> bw(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const auto k = pick(rng);
          bw[k] += w[k];
        }
        round.trees.push_back(RegressionTree::fit(x, z, bw, tp, rng));
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (const auto& t : round.trees) s += t.predict(x[i]);
      f[i] = s / static_cast<double>(round.trees.size());
    }
    const double prev = m->loss_.back();
    double step = c.shrinkage, loss = prev;
    bool improved = false;
    for (int k = 0; k < 20; ++k, step /= 2) {
      for (std::size_t i = 0; i < n; ++i) next[i] = F[i] + step * 0.5 * f[i];
      loss = log_loss(y, next);
      if (loss <= prev) {
        improved = true;
        break;
      }
    }
    if (!improved) break;
    F.swap(next);
    round.step = step;
    m->rounds_.push_back(std::move(round));
    m->loss_.push_back(loss);
    if (prev - loss < 1e-12) break;
  }
  return m;
}

double LogitBoost::score(const std::vector<double>& x) const {
  if (x.size() != inputs_) throw ModelError("input has " + std::to_string(x.size()) + " features, model expects " +
                                            std::to_string(inputs_));
  double F = 0;
  for (const auto& r : rounds_) {
    double s = 0;
    for (const auto& t : r.trees) s += t.predict(x);
    F += r.step * 0.5 * s / static_cast<double>(r.trees.size());
  }
  return F;
}

double LogitBoost::predict(const std::vector<double>& x) const { return 1.0 / (1.0 + std::exp(-2 * score(x))); }

json LogitBoost::to_json() const {
  json rounds = json::array();
  for (const auto& r : rounds_) {
    json trees = json::array();
    for (const auto& t : r.trees) trees.push_back(t.to_json());
    rounds.push_back({{"step", r.step}, {"trees", trees}});
  }
  return json{{"kind", std::string(to_string(kind()))}, {"inputs", inputs_}, {"rounds", rounds}, {"loss", loss_}};
}

std::unique_ptr<LogitBoost> LogitBoost::from_json(const json& j) {
  auto m = std::make_unique<LogitBoost>();
  m->inputs_ = j.at("inputs").get<std::size_t>();
  for (const auto& r : j.at("rounds")) {
    Round round;
    round.step = r.at("step").get<double>();
    for (const auto& t : r.at("trees")) round.trees.push_back(RegressionTree::from_json(t));
    if (round.trees.empty()) throw ModelError("boosting round without trees");
    m->rounds_.push_back(std::move(round));
  }
  m->loss_ = j.value("loss", std::vector<double>{});
  return m;
}

AvgProb::AvgProb(std::vector<std::shared_ptr<const Classifier>> members) : members_(std::move(members)) {
  if (members_.empty()) throw ModelError("ensemble needs at least one member");
  for (const auto& m : members_)
    if (!m || m->input_size() != members_[0]->input_size()) throw ModelError("ensemble members disagree on inputs");
}

std::unique_ptr<AvgProb> AvgProb::train(const Rows& x, const std::vector<int>& y, const Hyperparams& h,
                                        std::uint64_t seed) {
  detail::check_training_set(x, y);
  std::vector<std::shared_ptr<const Classifier>> members;
  for (std::size_t k = 0; k < h.ensemble.members.size(); ++k) {
    const auto kind = h.ensemble.members[k];
    if (kind == ModelKind::avgprob_ensemble) throw ModelError("ensemble cannot contain itself");
    members.push_back(chanaudit::train(kind, x, y, h, derive_seed(seed, 100 + k)));
  }
  return std::make_unique<AvgProb>(std::move(members));
}

std::size_t AvgProb::input_size() const { return members_[0]->input_size(); }

double AvgProb::predict(const std::vector<double>& x) const {
  double s = 0;
  for (const auto& m : members_) s += m->predict(x);
  return s / static_cast<double>(members_.size());
}

json AvgProb::to_json() const {
  json members = json::array();
  for (const auto& m : members_) members.push_back(m->to_json());
  return json{{"kind", std::string(to_string(kind()))}, {"members", members}};
}

std::unique_ptr<AvgProb> AvgProb::from_json(const json& j) {
  std::vector<std::shared_ptr<const Classifier>> members;
  for (const auto& m : j.at("members")) members.push_back(classifier_from_json(m));
  return std::make_unique<AvgProb>(std::move(members));
}

}  // namespace chanaudit
