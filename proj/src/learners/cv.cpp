#include <algorithm>

#include "chanaudit/stats.hpp"
#include "internal.hpp"

namespace chanaudit {

EvalReport evaluate_cv(ModelKind kind, const std::vector<int>& y, const FoldBuilder& build, const Hyperparams& h,
                       int folds, std::uint64_t seed) {
  if (folds < 2) throw ModelError("cross-validation needs at least 2 folds");
  for (int c : {0, 1})
    if (std::count(y.begin(), y.end(), c) < folds)
      throw ModelError("class " + std::to_string(c) + " has fewer samples than folds");
  const auto fold_of = stratified_folds(y, folds, seed);
  std::vector<double> oof(y.size(), 0.0);
  std::vector<EvalReport::Fold> per_fold;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < y.size(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
    if (te.empty()) continue;
    auto data = build(tr, te);
    if (data.test_x.size() != te.size()) throw ModelError("fold builder returned the wrong number of test rows");
    const auto model = train(kind, data.train_x, data.train_y, h, seed);
    std::vector<int> fy;
    std::vector<double> fp;
    for (std::size_t k = 0; k < te.size(); ++k) {
      oof[te[k]] = model->predict(data.test_x[k]);
      fy.push_back(y[te[k]]);
      fp.push_back(oof[te[k]]);
    }
    EvalReport::Fold fr;
    fr.size = te.size();
    fr.auc = auc_rank(fy, fp);
    fr.weighted = weighted_metrics(confusion_at(fy, fp));
    per_fold.push_back(fr);
  }
  auto report = evaluate_predictions(y, oof);
  report.fold_of = fold_of;
  report.folds = std::move(per_fold);
  return report;
}

EvalReport evaluate_cv(ModelKind kind, const Rows& x, const std::vector<int>& y, const Hyperparams& h, int folds,
                       std::uint64_t seed) {
  if (x.size() != y.size()) throw ModelError("rows and labels differ in length");
  FoldBuilder build = [&](const std::vector<std::size_t>& tr, const std::vector<std::size_t>& te) {
    FoldData d;
    for (auto i : tr) {
      d.train_x.push_back(x[i]);
      d.train_y.push_back(y[i]);
    }
    for (auto i : te) d.test_x.push_back(x[i]);
    return d;
  };
  return evaluate_cv(kind, y, build, h, folds, seed);
}

}  // namespace chanaudit
