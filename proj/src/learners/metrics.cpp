#include <algorithm>
#include <numeric>

#include "internal.hpp"

namespace chanaudit {

using nlohmann::json;

namespace {

double ratio(double a, double b) { return b > 0 ? a / b : 0.0; }

ClassMetrics metrics_for(double tp, double fn, double fp, double tn) {
  ClassMetrics m;
  m.tp_rate = m.recall = ratio(tp, tp + fn);
  m.fp_rate = ratio(fp, fp + tn);
  m.precision = ratio(tp, tp + fp);
  m.f1 = ratio(2 * m.precision * m.recall, m.precision + m.recall);
  m.support = static_cast<std::size_t>(tp + fn);
  return m;
}

void check_scores(const std::vector<int>& y, const std::vector<double>& s) {
  if (y.size() != s.size()) throw std::invalid_argument("labels and scores differ in length");
  for (int v : y)
    if (v != 0 && v != 1) throw std::invalid_argument("labels must be 0 or 1");
}

json to_json(const ClassMetrics& m) {
  return json{{"tp_rate", m.tp_rate}, {"fp_rate", m.fp_rate}, {"precision", m.precision},
              {"recall", m.recall},   {"f1", m.f1},           {"support", m.support}};
}

}  // namespace

std::array<ClassMetrics, 2> per_class_metrics(const Confusion& c) {
  const double tp = double(c.tp), fn = double(c.fn), fp = double(c.fp), tn = double(c.tn);
  return {metrics_for(tn, fp, fn, tp), metrics_for(tp, fn, fp, tn)};
}

ClassMetrics weighted_metrics(const Confusion& c) {
  const auto pc = per_class_metrics(c);
  const double n = static_cast<double>(c.total());
  ClassMetrics w;
  w.support = c.total();
  if (n == 0) return w;
  for (const auto& m : pc) {
    const double f = static_cast<double>(m.support) / n;
    w.tp_rate += f * m.tp_rate;
    w.fp_rate += f * m.fp_rate;
    w.precision += f * m.precision;
    w.recall += f * m.recall;
    w.f1 += f * m.f1;
  }
  return w;
}

Confusion confusion_at(const std::vector<int>& y, const std::vector<double>& p, double threshold) {
  check_scores(y, p);
  Confusion c;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool pred = p[i] > threshold;
    if (y[i] == 1)
      (pred ? c.tp : c.fn)++;
    else
      (pred ? c.fp : c.tn)++;
  }
  return c;
}

double auc_rank(const std::vector<int>& y, const std::vector<double>& score) {
  check_scores(y, score);
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  double rank_sum = 0, pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && score[idx[j]] == score[idx[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (y[idx[k]] == 1) {
        rank_sum += mid;
        pos += 1;
      }
    i = j;
  }
  const double neg = static_cast<double>(y.size()) - pos;
  if (pos == 0 || neg == 0) return 0.5;
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

double auc_trapezoid(const std::vector<int>& y, const std::vector<double>& score) {
  check_scores(y, score);
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  const double P = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double N = static_cast<double>(y.size()) - P;
  if (P == 0 || N == 0) return 0.5;
  double tp = 0, fp = 0, area = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double tp0 = tp, fp0 = fp;
    std::size_t j = i;
    for (; j < idx.size() && score[idx[j]] == score[idx[i]]; ++j) (y[idx[j]] == 1 ? tp : fp) += 1;
    area += (fp - fp0) / N * (tp + tp0) / 2.0 / P;
    i = j;
  }
  return area;
}

EvalReport evaluate_predictions(const std::vector<int>& y, const std::vector<double>& p) {
  EvalReport r;
  r.confusion = confusion_at(y, p);
  r.per_class = per_class_metrics(r.confusion);
  r.weighted = weighted_metrics(r.confusion);
  r.auc = auc_rank(y, p);
  r.oof_probability = p;
  return r;
}

json to_json(const EvalReport& r, bool include_predictions) {
  json folds = json::array();
  for (const auto& f : r.folds) folds.push_back({{"size", f.size}, {"auc", f.auc}, {"weighted", to_json(f.weighted)}});
  json j{{"auc", r.auc},
         {"weighted", to_json(r.weighted)},
         {"per_class", {{"suitable", to_json(r.per_class[0])}, {"disturbing", to_json(r.per_class[1])}}},
         {"confusion", {{"tp", r.confusion.tp}, {"fn", r.confusion.fn}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}}},
         {"folds", folds}};
  if (include_predictions) {
    j["oof_probability"] = r.oof_probability;
    j["fold_of"] = r.fold_of;
  }
  return j;
}

}  // namespace chanaudit
