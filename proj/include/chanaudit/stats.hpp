#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chanaudit/corpus.hpp"

namespace chanaudit {

// ---- Kolmogorov-Smirnov ---------------------------------------------------

enum class KSMethod { asymptotic, exact };
std::string_view to_string(KSMethod m);

struct KSResult {
  double d_statistic = 0;
  double p_value = 1;
  std::size_t n1 = 0, n2 = 0;
  KSMethod method = KSMethod::asymptotic;
};

inline constexpr std::uint64_t kExactKSLimit = 10000;

/// Two-sided two-sample test. Exact lattice-path p when n1*n2 <= kExactKSLimit
/// unless `force` says otherwise.
KSResult ks_two_sample(std::vector<double> a, std::vector<double> b, std::optional<KSMethod> force = std::nullopt);

/// sup |F_a - F_b| scaled by n1*n2, so exact comparisons stay integral.
std::uint64_t ks_scaled_statistic(std::vector<double> a, std::vector<double> b);

/// P(D >= d) for the Kolmogorov limit with the Stephens small-sample correction
/// on effective n = n1*n2/(n1+n2).
double ks_asymptotic_p(double d, std::size_t n1, std::size_t n2);
/// Exact P(D >= scaled/(n1*n2)) under the null, no ties.
double ks_exact_p(std::uint64_t scaled, std::size_t n1, std::size_t n2);
/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2).
double kolmogorov_q(double lambda);

struct KSRow {
  std::string feature;
  KSResult result;
  double mean_suitable = 0, mean_disturbing = 0;
};

nlohmann::json to_json(const KSRow& r);

/// Count characteristics compared by class: videoCount, viewCount,
/// subscriptionCount, subscriberCount (hidden excluded), descriptionCharCount,
/// keywordsCount, topicCount, postCount.
std::vector<KSRow> ks_count_table(const Corpus& corpus);

// ---- ECDF -----------------------------------------------------------------

struct ECDFPoint {
  double x;
  double f_suitable;
  double f_disturbing;
};

struct ECDFReport {
  std::string feature;
  std::vector<ECDFPoint> points;
  double mean_suitable = 0, mean_disturbing = 0;
};

/// Evaluated at every distinct sample value of either class.
ECDFReport ecdf_report(const std::vector<double>& suitable, const std::vector<double>& disturbing,
                       std::string feature);
/// Right-continuous empirical CDF of `samples` at x.
double ecdf(const std::vector<double>& sorted_samples, double x);
nlohmann::json to_json(const ECDFReport& r);

// ---- entropy and information gain ----------------------------------------

/// Shannon entropy in bits of a class count vector.
double entropy(const std::vector<std::size_t>& counts);
double entropy(std::size_t a, std::size_t b);

/// Supervised MDL (Fayyad-Irani) cut points for a numeric column against binary labels.
std::vector<double> mdl_cut_points(const std::vector<double>& x, const std::vector<int>& y);

/// H(class) - H(class | bin) with bins from `cuts`.
double info_gain(const std::vector<double>& x, const std::vector<int>& y, const std::vector<double>& cuts);
/// Information gain after MDL discretization on the same data.
double info_gain(const std::vector<double>& x, const std::vector<int>& y);

/// Fold index per sample; each class is shuffled and dealt round-robin.
std::vector<int> stratified_folds(const std::vector<int>& y, int k, std::uint64_t seed);

struct RankedAttribute {
  std::string name;
  double mean_info_gain = 0;
  std::vector<double> fold_scores;
};

/// Per fold the cut points and gain are computed on that fold's training part.
std::vector<RankedAttribute> info_gain_rank(const std::vector<std::vector<double>>& rows, const std::vector<int>& y,
                                            const std::vector<std::string>& names, int folds = 10,
                                            std::uint64_t seed = 1);
nlohmann::json to_json(const RankedAttribute& r);

}  // namespace chanaudit
