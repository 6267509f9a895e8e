#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chanaudit/features.hpp"

namespace chanaudit {

using Rows = std::vector<std::vector<double>>;

enum class ModelKind {
  random_forest,
  logistic_regression,
  naive_bayes,
  mlp,
  logitboost_meta,
  avgprob_ensemble,
  bagged_random_forest,
};

std::string_view to_string(ModelKind k);
/// Accepts the full names and the short forms rf, lr, nb, mlp, logitboost, avgprob, brf.
std::optional<ModelKind> parse_model_kind(std::string_view s);

struct Hyperparams {
  struct {
    int trees = 100;
    int mtry = 0;  // 0: floor(sqrt(features)), at least 1
    int max_depth = 0;  // 0: unlimited
    int min_leaf = 1;
  } rf;
  struct {
    double l2 = 1.0;
    int max_iter = 100;
  } lr;
  struct {
    double min_std = 1e-6;
  } nb;
  struct {
    int hidden = 128;
    int epochs = 50;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double l2 = 1e-4;
    int batch = 32;
  } mlp;
  struct {
    int rounds = 50;
    int depth = 3;
    std::string base = "tree";  // or "forest"
    int base_trees = 10;
    double shrinkage = 1.0;
    double z_max = 3.0;
  } boost;
  struct {
    std::vector<ModelKind> members = {ModelKind::random_forest, ModelKind::logistic_regression,
                                      ModelKind::naive_bayes, ModelKind::bagged_random_forest};
    int bags = 10;
    int bag_trees = 10;
  } ensemble;
};

nlohmann::json to_json(const Hyperparams& h);
/// Missing keys keep their defaults.
Hyperparams hyperparams_from_json(const nlohmann::json& j);

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary classifier over dense rows; label 1 = disturbing.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ModelKind kind() const = 0;
  virtual std::size_t input_size() const = 0;
  /// Probability of class 1.
  virtual double predict(const std::vector<double>& x) const = 0;
  virtual nlohmann::json to_json() const = 0;

  std::array<double, 2> predict_proba(const std::vector<double>& x) const;
};

std::unique_ptr<Classifier> train(ModelKind kind, const Rows& x, const std::vector<int>& y, const Hyperparams& h,
                                  std::uint64_t seed);
std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j);

/// Independent stream for component `k` of a model trained with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k);

// ---- trees ----------------------------------------------------------------

struct TreeParams {
  int max_depth = 0;
  int min_leaf = 1;
  int mtry = 0;  // 0: all features
};

/// CART on a weighted squared-error criterion. On 0/1 targets the split
/// ordering is the Gini ordering and leaves hold class-1 frequencies.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1: leaf
    double threshold = 0;
    int left = -1, right = -1;
    double value = 0;
  };

  static RegressionTree fit(const Rows& x, const std::vector<double>& target, const std::vector<double>& weight,
                            const TreeParams& p, std::mt19937_64& rng);
  double predict(const std::vector<double>& x) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t depth() const;

  nlohmann::json to_json() const;
  static RegressionTree from_json(const nlohmann::json& j);

 private:
  std::vector<Node> nodes_;
};

class RandomForest : public Classifier {
 public:
  static std::unique_ptr<RandomForest> train(const Rows& x, const std::vector<int>& y, int trees, const TreeParams& p,
                                             std::uint64_t seed);
  ModelKind kind() const override { return ModelKind::random_forest; }
  std::size_t input_size() const override { return inputs_; }
  double predict(const std::vector<double>& x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<RandomForest> from_json(const nlohmann::json& j);
  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  std::size_t inputs_ = 0;
  std::vector<RegressionTree> trees_;
};

/// Bagging over random forests, each fitted on its own bootstrap replicate.
class BaggedForest : public Classifier {
 public:
  static std::unique_ptr<BaggedForest> train(const Rows& x, const std::vector<int>& y, int bags, int trees,
                                             const TreeParams& p, std::uint64_t seed);
  ModelKind kind() const override { return ModelKind::bagged_random_forest; }
  std::size_t input_size() const override { return inputs_; }
  double predict(const std::vector<double>& x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<BaggedForest> from_json(const nlohmann::json& j);

 private:
  std::size_t inputs_ = 0;
  std::vector<std::unique_ptr<RandomForest>> bags_;
};

// ---- linear and probabilistic ----------------------------------------------

/// Column means and scales; zero-variance columns keep scale 1.
struct Standardizer {
  std::vector<double> mean, scale;
  static Standardizer fit(const Rows& x);
  std::vector<double> apply(const std::vector<double>& x) const;
  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
};

/// L2-penalised logistic regression on standardised inputs, fitted by Newton steps.
/// The intercept is not penalised.
class LogisticRegression : public Classifier {
 public:
  static std::unique_ptr<LogisticRegression> train(const Rows& x, const std::vector<int>& y, double l2, int max_iter);
  ModelKind kind() const override { return ModelKind::logistic_regression; }
  std::size_t input_size() const override { return std_.mean.size(); }
  double predict(const std::vector<double>& x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<LogisticRegression> from_json(const nlohmann::json& j);
  const std::vector<double>& weights() const { return w_; }
  double intercept() const { return b_; }

 private:
  Standardizer std_;
  std::vector<double> w_;
  double b_ = 0;
};

/// Gaussian naive Bayes. Per-feature standard deviations are floored at a
/// sixth of the mean gap between distinct training values, and at min_std.
class NaiveBayes : public Classifier {
 public:
  static std::unique_ptr<NaiveBayes> train(const Rows& x, const std::vector<int>& y, double min_std);
  ModelKind kind() const override { return ModelKind::naive_bayes; }
  std::size_t input_size() const override { return mean_[0].size(); }
  double predict(const std::vector<double>& x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<NaiveBayes> from_json(const nlohmann::json& j);

 private:
  std::array<double, 2> log_prior_{};
  std::array<std::vector<double>, 2> mean_, std_;
};

/// inputs x hidden (sigmoid) x 2 (softmax), cross-entropy loss with L2 on weights.
class MLP : public Classifier {
 public:
  MLP(std::size_t inputs, std::size_t hidden, std::uint64_t seed);
  static std::unique_ptr<MLP> train(const Rows& x, const std::vector<int>& y, const Hyperparams& h, std::uint64_t seed);
  ModelKind kind() const override { return ModelKind::mlp; }
  std::size_t input_size() const override { return in_; }
  double predict(const std::vector<double>& x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<MLP> from_json(const nlohmann::json& j);

  /// Mean loss over already standardised rows; fills `grad` (same layout as params) when given.
  double loss(const Rows& xs, const std::vector<int>& y, double l2, std::vector<double>* grad) const;
  std::vector<double>& params() { return p_; }
  std::size_t hidden() const { return hid_; }

 private:
  std::size_t in_ = 0, hid_ = 0;
  // [W1 (hid x in), b1 (hid), W2 (2 x hid), b2 (2)]
  std::vector<double> p_;
  Standardizer std_;
  std::array<double, 2> logits(const std::vector<double>& z, std::vector<double>* hidden_out) const;
};

/// Two-class LogitBoost. Each round fits the working response with a weighted
/// regression tree (or small forest) and halves the step while the training
/// log-loss would rise.
class LogitBoost : public Classifier {
 public:
  static std::unique_ptr<LogitBoost> train(const Rows& x, const std::vector<int>& y, const Hyperparams& h,
                                           std::uint64_t seed);
  ModelKind kind() const override { return ModelKind::logitboost_meta; }
  std::size_t input_size() const override { return inputs_; }
  double predict(const std::vector<double>& x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<LogitBoost> from_json(const nlohmann::json& j);

  /// Training log-loss before the first round and after each round.
  const std::vector<double>& loss_history() const { return loss_; }

 private:
  struct Round {
    double step = 0;
    std::vector<RegressionTree> trees;
  };
  std::size_t inputs_ = 0;
  std::vector<Round> rounds_;
  std::vector<double> loss_;
  double score(const std::vector<double>& x) const;
};

/// Mean of member probabilities.
class AvgProb : public Classifier {
 public:
  explicit AvgProb(std::vector<std::shared_ptr<const Classifier>> members);
  static std::unique_ptr<AvgProb> train(const Rows& x, const std::vector<int>& y, const Hyperparams& h,
                                        std::uint64_t seed);
  ModelKind kind() const override { return ModelKind::avgprob_ensemble; }
  std::size_t input_size() const override;
  double predict(const std::vector<double>& x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<AvgProb> from_json(const nlohmann::json& j);
  const std::vector<std::shared_ptr<const Classifier>>& members() const { return members_; }

 private:
  std::vector<std::shared_ptr<const Classifier>> members_;
};

// ---- metrics --------------------------------------------------------------

struct Confusion {
  std::size_t tp = 0, fn = 0, fp = 0, tn = 0;  // class 1 positive
  std::size_t total() const { return tp + fn + fp + tn; }
};

struct ClassMetrics {
  double tp_rate = 0, fp_rate = 0, precision = 0, recall = 0, f1 = 0;
  std::size_t support = 0;
};

/// Index 0: suitable, 1: disturbing. Ratios with a zero denominator are 0.
std::array<ClassMetrics, 2> per_class_metrics(const Confusion& c);
/// Support-weighted mean of the per-class metrics.
ClassMetrics weighted_metrics(const Confusion& c);

/// Predicted class is 1 when p > threshold.
Confusion confusion_at(const std::vector<int>& y, const std::vector<double>& p, double threshold = 0.5);

/// Mann-Whitney statistic with mid-ranks for ties.
double auc_rank(const std::vector<int>& y, const std::vector<double>& score);
/// Area under the ROC step curve, tied scores joined by a straight segment.
double auc_trapezoid(const std::vector<int>& y, const std::vector<double>& score);

struct EvalReport {
  std::array<ClassMetrics, 2> per_class;
  ClassMetrics weighted;
  double auc = 0;
  Confusion confusion;
  std::vector<double> oof_probability;
  std::vector<int> fold_of;
  struct Fold {
    std::size_t size = 0;
    double auc = 0;
    ClassMetrics weighted;
  };
  std::vector<Fold> folds;
};

EvalReport evaluate_predictions(const std::vector<int>& y, const std::vector<double>& p);
nlohmann::json to_json(const EvalReport& r, bool include_predictions = false);

// ---- cross-validation -----------------------------------------------------

struct FoldData {
  Rows train_x;
  std::vector<int> train_y;
  Rows test_x;
};

/// Builds train/test rows for one fold from sample indices.
using FoldBuilder = std::function<FoldData(const std::vector<std::size_t>& train, const std::vector<std::size_t>& test)>;

/// Stratified k-fold; metrics pooled over out-of-fold predictions.
EvalReport evaluate_cv(ModelKind kind, const std::vector<int>& y, const FoldBuilder& build, const Hyperparams& h,
                       int folds, std::uint64_t seed);
EvalReport evaluate_cv(ModelKind kind, const Rows& x, const std::vector<int>& y, const Hyperparams& h, int folds,
                       std::uint64_t seed);

// ---- persisted models -----------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

struct TrainedModel {
  ModelKind kind = ModelKind::random_forest;
  Hyperparams hyper;
  std::shared_ptr<const Classifier> classifier;
  std::optional<FeaturePipeline> pipeline;  // absent for models trained on a bare matrix
  std::vector<std::string> feature_names;
  std::vector<double> feature_means;  // training means, the attribution baseline
  std::uint64_t seed = 0;
  int folds = 0;
  std::string trained_at;

  double predict(const std::vector<double>& x) const { return classifier->predict(x); }
};

TrainedModel train_model(ModelKind kind, const FeatureMatrix& m, const Hyperparams& h, std::uint64_t seed);

nlohmann::json to_json(const TrainedModel& m);
TrainedModel trained_model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& m, const std::filesystem::path& path);
/// Throws ModelError on unreadable, truncated or wrong-version files.
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace chanaudit
