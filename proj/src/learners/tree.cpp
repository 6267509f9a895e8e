#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "internal.hpp"

namespace chanaudit {

using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

struct Builder {
  const Rows& x;
  const std::vector<double>& t;
  const std::vector<double>& w;
  const TreeParams& p;
  std::mt19937_64& rng;
  std::vector<RegressionTree::Node>& nodes;
  std::size_t features;

  int build(std::vector<std::size_t> idx, int depth) {
    double W = 0, S = 0, Q = 0;
    for (auto i : idx) {
      W += w[i];
      S += w[i] * t[i];
      Q += w[i] * t[i] * t[i];
    }
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[id].value = W > 0 ? S / W : 0.0;
    const double sse = Q - (W > 0 ? S * S / W : 0.0);
    const auto min_leaf = static_cast<std::size_t>(std::max(1, p.min_leaf));
    if (idx.size() < 2 * min_leaf || (p.max_depth > 0 && depth >= p.max_depth) || sse <= 1e-12 * std::max(W, 1.0))
      return id;

    std::vector<std::size_t> order(features);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t mtry = p.mtry > 0 ? std::min<std::size_t>(static_cast<std::size_t>(p.mtry), features) : features;

    double best = sse;
    int best_f = -1;
    double best_thr = 0;
    std::vector<std::size_t> sorted(idx);
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k >= mtry && best_f >= 0) break;
      const auto f = order[k];
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
      double lw = 0, ls = 0, lq = 0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const auto s = sorted[i];
        lw += w[s];
        ls += w[s] * t[s];
        lq += w[s] * t[s] * t[s];
        const double xv = x[s][f], xn = x[sorted[i + 1]][f];
        if (xv == xn) continue;
        if (i + 1 < min_leaf || sorted.size() - i - 1 < min_leaf) continue;
        const double rw = W - lw, rs = S - ls, rq = Q - lq;
        const double e = (lq - (lw > 0 ? ls * ls / lw : 0)) + (rq - (rw > 0 ? rs * rs / rw : 0));
        if (e < best - 1e-12) {
          best = e;
          best_f = static_cast<int>(f);
          double mid = xv + (xn - xv) / 2;
          if (!(mid < xn)) mid = xv;
          best_thr = mid;
        }
      }
    }
    if (best_f < 0) return id;
    std::vector<std::size_t> left, right;
    for (auto i : idx) (x[i][static_cast<std::size_t>(best_f)] <= best_thr ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    sorted.clear();
    sorted.shrink_to_fit();
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    nodes[id].feature = best_f;
    nodes[id].threshold = best_thr;
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }
};

}  // namespace

namespace detail {

void check_training_set(const Rows& x, const std::vector<int>& y) {
  if (x.empty() || x.size() != y.size()) throw ModelError("training rows and labels differ or are empty");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v == 0) has0 = true;
    else if (v == 1) has1 = true;
    else throw ModelError("labels must be 0 or 1");
  }
  if (!has0 || !has1) throw ModelError("training labels contain a single class");
  const auto d = x[0].size();
  for (const auto& r : x) {
    if (r.size() != d) throw ModelError("ragged training rows");
    for (double v : r)
      if (!std::isfinite(v)) throw ModelError("non-finite feature value in training data");
  }
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = static_cast<unsigned>(std::min<std::size_t>(hw, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto run = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lk(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < workers; ++k) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

using detail::check_training_set;
using detail::parallel_for;

RegressionTree RegressionTree::fit(const Rows& x, const std::vector<double>& target, const std::vector<double>& weight,
                                   const TreeParams& p, std::mt19937_64& rng) {
  if (x.size() != target.size() || x.size() != weight.size()) throw ModelError("tree inputs differ in length");
  RegressionTree tree;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (weight[i] > 0) idx.push_back(i);
  if (idx.empty()) throw ModelError("tree has no weighted samples");
  Builder b{x, target, weight, p, rng, tree.nodes_, x[0].size()};
  b.build(std::move(idx), 0);
  return tree;
}

double RegressionTree::predict(const std::vector<double>& x) const {
  int n = 0;
  while (nodes_[static_cast<std::size_t>(n)].feature >= 0) {
    const auto& node = nodes_[static_cast<std::size_t>(n)];
    n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes_[static_cast<std::size_t>(n)].value;
}

std::size_t RegressionTree::depth() const {
  std::function<std::size_t(int)> rec = [&](int n) -> std::size_t {
    const auto& node = nodes_[static_cast<std::size_t>(n)];
    if (node.feature < 0) return 0;
    return 1 + std::max(rec(node.left), rec(node.right));
  };
  return nodes_.empty() ? 0 : rec(0);
}

json RegressionTree::to_json() const {
  json f = json::array(), t = json::array(), l = json::array(), r = json::array(), v = json::array();
  for (const auto& n : nodes_) {
    f.push_back(n.feature);
    t.push_back(n.threshold);
    l.push_back(n.left);
    r.push_back(n.right);
    v.push_back(n.value);
  }
  return json{{"feature", f}, {"threshold", t}, {"left", l}, {"right", r}, {"value", v}};
}

RegressionTree RegressionTree::from_json(const json& j) {
  RegressionTree tree;
  const auto& f = j.at("feature");
  const auto n = f.size();
  for (std::size_t i = 0; i < n; ++i) {
    Node node;
    node.feature = f.at(i).get<int>();
    node.threshold = j.at("threshold").at(i).get<double>();
    node.left = j.at("left").at(i).get<int>();
    node.right = j.at("right").at(i).get<int>();
    node.value = j.at("value").at(i).get<double>();
    tree.nodes_.push_back(node);
  }
  if (tree.nodes_.empty()) throw ModelError("empty tree");
  for (const auto& node : tree.nodes_)
    if (node.feature >= 0 && (node.left <= 0 || node.right <= 0 || static_cast<std::size_t>(node.left) >= n ||
                              static_cast<std::size_t>(node.right) >= n))
      throw ModelError("tree node points outside the tree");
  return tree;
}

std::unique_ptr<RandomForest> RandomForest::train(const Rows& x, const std::vector<int>& y, int trees,
                                                  const TreeParams& p, std::uint64_t seed) {
  check_training_set(x, y);
  if (trees < 1) throw ModelError("forest needs at least one tree");
  auto rf = std::make_unique<RandomForest>();
  rf->inputs_ = x[0].size();
  TreeParams tp = p;
  if (tp.mtry <= 0) tp.mtry = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(rf->inputs_)))));
  const std::vector<double> target(y.begin(), y.end());
  rf->trees_.resize(static_cast<std::size_t>(trees));
  parallel_for(rf->trees_.size(), [&](std::size_t t) {
    std::mt19937_64 rng(derive_seed(seed, t));
    std::vector<double> w(x.size(), 0.0);
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    for (std::size_t i = 0; i < x.size(); ++i) w[pick(rng)] += 1.0;
    rf->trees_[t] = RegressionTree::fit(x, target, w, tp, rng);
  });
  return rf;
}

double RandomForest::predict(const std::vector<double>& x) const {
  if (x.size() != inputs_) throw ModelError("input has " + std::to_string(x.size()) + " features, model expects " +
                                            std::to_string(inputs_));
  double s = 0;
  for (const auto& t : trees_) s += t.predict(x);
  return s / static_cast<double>(trees_.size());
}

json RandomForest::to_json() const {
  json trees = json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return json{{"kind", std::string(to_string(kind()))}, {"inputs", inputs_}, {"trees", trees}};
}

std::unique_ptr<RandomForest> RandomForest::from_json(const json& j) {
  auto rf = std::make_unique<RandomForest>();
  rf->inputs_ = j.at("inputs").get<std::size_t>();
  for (const auto& t : j.at("trees")) rf->trees_.push_back(RegressionTree::from_json(t));
  if (rf->trees_.empty()) throw ModelError("forest without trees");
  return rf;
}

std::unique_ptr<BaggedForest> BaggedForest::train(const Rows& x, const std::vector<int>& y, int bags, int trees,
                                                  const TreeParams& p, std::uint64_t seed) {
  check_training_set(x, y);
  if (bags < 1) throw ModelError("bagging needs at least one bag");
  auto bf = std::make_unique<BaggedForest>();
  bf->inputs_ = x[0].size();
  for (int b = 0; b < bags; ++b) {
    std::mt19937_64 rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(b)));
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    Rows bx;
    std::vector<int> by;
    for (int attempt = 0; attempt < 100; ++attempt) {
      bx.clear();
      by.clear();
      for (std::size_t i = 0; i < x.size(); ++i) {
        const auto k = pick(rng);
        bx.push_back(x[k]);
        by.push_back(y[k]);
      }
      if (std::count(by.begin(), by.end(), 1) > 0 && std::count(by.begin(), by.end(), 0) > 0) break;
    }
    bf->bags_.push_back(RandomForest::train(bx, by, trees, p, derive_seed(seed, 2000 + static_cast<std::uint64_t>(b))));
  }
  return bf;
}

double BaggedForest::predict(const std::vector<double>& x) const {
  double s = 0;
  for (const auto& b : bags_) s += b->predict(x);
  return s / static_cast<double>(bags_.size());
}

json BaggedForest::to_json() const {
  json bags = json::array();
  for (const auto& b : bags_) bags.push_back(b->to_json());
  return json{{"kind", std::string(to_string(kind()))}, {"inputs", inputs_}, {"bags", bags}};
}

std::unique_ptr<BaggedForest> BaggedForest::from_json(const json& j) {
  auto bf = std::make_unique<BaggedForest>();
  bf->inputs_ = j.at("inputs").get<std::size_t>();
  for (const auto& b : j.at("bags")) bf->bags_.push_back(RandomForest::from_json(b));
  if (bf->bags_.empty()) throw ModelError("bagging without members");
  return bf;
}

}  // namespace chanaudit
