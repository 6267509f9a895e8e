#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "chanaudit/stats.hpp"

namespace chanaudit {

using nlohmann::json;

double ecdf(const std::vector<double>& sorted_samples, double x) {
  if (sorted_samples.empty()) return 0;
  auto it = std::upper_bound(sorted_samples.begin(), sorted_samples.end(), x);
  return static_cast<double>(it - sorted_samples.begin()) / static_cast<double>(sorted_samples.size());
}

ECDFReport ecdf_report(const std::vector<double>& suitable, const std::vector<double>& disturbing,
                       std::string feature) {
  if (suitable.empty() || disturbing.empty()) throw std::invalid_argument("ECDF report needs samples of both classes");
  ECDFReport r;
  r.feature = std::move(feature);
  auto s = suitable, d = disturbing;
  std::sort(s.begin(), s.end());
  std::sort(d.begin(), d.end());
  std::vector<double> xs(s);
  xs.insert(xs.end(), d.begin(), d.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double x : xs) r.points.push_back({x, ecdf(s, x), ecdf(d, x)});
  r.mean_suitable = std::accumulate(s.begin(), s.end(), 0.0) / double(s.size());
  r.mean_disturbing = std::accumulate(d.begin(), d.end(), 0.0) / double(d.size());
  return r;
}

json to_json(const ECDFReport& r) {
  json pts = json::array();
  for (const auto& p : r.points) pts.push_back({p.x, p.f_suitable, p.f_disturbing});
  return json{{"feature", r.feature},
              {"columns", {"x", "F_suitable", "F_disturbing"}},
              {"points", pts},
              {"mean_suitable", r.mean_suitable},
              {"mean_disturbing", r.mean_disturbing}};
}

double entropy(const std::vector<std::size_t>& counts) {
  const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (n == 0) return 0;
  double h = 0;
  for (auto c : counts)
    if (c) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log2(p);
    }
  return h;
}

double entropy(std::size_t a, std::size_t b) { return entropy(std::vector<std::size_t>{a, b}); }

namespace {

struct Sample {
  double x;
  int y;
};

std::vector<std::size_t> class_counts(const std::vector<Sample>& s, std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> c(2, 0);
  for (std::size_t i = lo; i < hi; ++i) ++c[static_cast<std::size_t>(s[i].y)];
  return c;
}

std::size_t distinct_classes(const std::vector<std::size_t>& c) {
  return static_cast<std::size_t>(std::count_if(c.begin(), c.end(), [](std::size_t v) { return v > 0; }));
}

// Fayyad-Irani recursive partitioning of s[lo, hi).
void mdl_split(const std::vector<Sample>& s, std::size_t lo, std::size_t hi, std::vector<double>& cuts) {
  const std::size_t n = hi - lo;
  if (n < 2) return;
  const auto total = class_counts(s, lo, hi);
  const double ent = entropy(total);
  if (ent == 0) return;
  std::vector<std::size_t> left(2, 0);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  std::vector<std::size_t> best_left;
  for (std::size_t i = lo; i + 1 < hi; ++i) {
    ++left[static_cast<std::size_t>(s[i].y)];
    if (s[i].x == s[i + 1].x) continue;
    std::vector<std::size_t> right = {total[0] - left[0], total[1] - left[1]};
    const double nl = static_cast<double>(i + 1 - lo), nr = static_cast<double>(hi - i - 1);
    const double e = (nl * entropy(left) + nr * entropy(right)) / static_cast<double>(n);
    if (e < best) {
      best = e;
      best_i = i;
      best_left = left;
    }
  }
  if (best_left.empty()) return;
  const std::vector<std::size_t> best_right = {total[0] - best_left[0], total[1] - best_left[1]};
  const double gain = ent - best;
  const double k = static_cast<double>(distinct_classes(total));
  const double k1 = static_cast<double>(distinct_classes(best_left));
  const double k2 = static_cast<double>(distinct_classes(best_right));
  const double delta = std::log2(std::pow(3.0, k) - 2.0) - (k * ent - k1 * entropy(best_left) - k2 * entropy(best_right));
  const double nd = static_cast<double>(n);
  if (gain <= (std::log2(nd - 1.0) + delta) / nd) return;
  mdl_split(s, lo, best_i + 1, cuts);
  cuts.push_back((s[best_i].x + s[best_i + 1].x) / 2.0);
  mdl_split(s, best_i + 1, hi, cuts);
}

void check_xy(const std::vector<double>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("feature and label lengths differ");
  for (int v : y)
    if (v != 0 && v != 1) throw std::invalid_argument("labels must be 0 or 1");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("feature values must be finite");
}

}  // namespace

std::vector<double> mdl_cut_points(const std::vector<double>& x, const std::vector<int>& y) {
  check_xy(x, y);
  std::vector<Sample> s;
  for (std::size_t i = 0; i < x.size(); ++i) s.push_back({x[i], y[i]});
  std::sort(s.begin(), s.end(), [](const Sample& a, const Sample& b) { return a.x < b.x; });
  std::vector<double> cuts;
  mdl_split(s, 0, s.size(), cuts);
  return cuts;
}

double info_gain(const std::vector<double>& x, const std::vector<int>& y, const std::vector<double>& cuts) {
  check_xy(x, y);
  if (x.empty()) return 0;
  std::vector<std::vector<std::size_t>> bins(cuts.size() + 1, std::vector<std::size_t>(2, 0));
  std::vector<std::size_t> total(2, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto b = static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), x[i]) - cuts.begin());
    ++bins[b][static_cast<std::size_t>(y[i])];
    ++total[static_cast<std::size_t>(y[i])];
  }
  const double n = static_cast<double>(x.size());
  double cond = 0;
  for (const auto& b : bins) cond += static_cast<double>(b[0] + b[1]) / n * entropy(b);
  return std::max(0.0, entropy(total) - cond);
}

double info_gain(const std::vector<double>& x, const std::vector<int>& y) {
  return info_gain(x, y, mdl_cut_points(x, y));
}

std::vector<int> stratified_folds(const std::vector<int>& y, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("need at least 2 folds");
  if (static_cast<std::size_t>(k) > y.size()) throw std::invalid_argument("more folds than samples");
  std::mt19937_64 rng(seed);
  std::vector<int> fold(y.size(), 0);
  std::vector<int> classes(y.begin(), y.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  int next = 0;
  for (int c : classes) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == c) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) {
      fold[i] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

std::vector<RankedAttribute> info_gain_rank(const std::vector<std::vector<double>>& rows, const std::vector<int>& y,
                                            const std::vector<std::string>& names, int folds, std::uint64_t seed) {
  if (rows.size() != y.size()) throw std::invalid_argument("row and label counts differ");
  const bool has0 = std::find(y.begin(), y.end(), 0) != y.end(), has1 = std::find(y.begin(), y.end(), 1) != y.end();
  if (!has0 || !has1) throw std::invalid_argument("information gain ranking needs both classes");
  for (const auto& r : rows)
    if (r.size() != names.size()) throw std::invalid_argument("row width differs from feature names");
  const auto fold = stratified_folds(y, folds, seed);
  std::vector<std::vector<double>> scores(names.size(), std::vector<double>(static_cast<std::size_t>(folds), 0.0));
  auto run_fold = [&](int f) {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (fold[i] != f) train.push_back(i);
    std::vector<int> ty;
    for (auto i : train) ty.push_back(y[i]);
    for (std::size_t j = 0; j < names.size(); ++j) {
      std::vector<double> tx;
      tx.reserve(train.size());
      for (auto i : train) tx.push_back(rows[i][j]);
      scores[j][static_cast<std::size_t>(f)] = info_gain(tx, ty);
    }
  };
  std::vector<std::thread> pool;
  for (int f = 0; f < folds; ++f) pool.emplace_back(run_fold, f);
  for (auto& t : pool) t.join();
  std::vector<RankedAttribute> out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    RankedAttribute a;
    a.name = names[j];
    a.fold_scores = scores[j];
    a.mean_info_gain = std::accumulate(a.fold_scores.begin(), a.fold_scores.end(), 0.0) / folds;
    out.push_back(std::move(a));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedAttribute& a, const RankedAttribute& b) { return a.mean_info_gain > b.mean_info_gain; });
  return out;
}

json to_json(const RankedAttribute& r) {
  return json{{"name", r.name}, {"mean_info_gain", r.mean_info_gain}, {"fold_scores", r.fold_scores}};
}

}  // namespace chanaudit
