#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "internal.hpp"

namespace chanaudit {

using nlohmann::json;
using detail::check_training_set;

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_input(const std::vector<double>& x, std::size_t n) {
  if (x.size() != n)
    throw ModelError("input has " + std::to_string(x.size()) + " features, model expects " + std::to_string(n));
}

}  // namespace

Standardizer Standardizer::fit(const Rows& x) {
  if (x.empty()) throw ModelError("cannot standardise an empty set");
  const auto d = x[0].size();
  const double n = static_cast<double>(x.size());
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  for (const auto& r : x)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j] / n;
  for (std::size_t j = 0; j < d; ++j) {
    double v = 0;
    for (const auto& r : x) v += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
    const double sd = std::sqrt(v / n);
    if (sd > 1e-12) s.scale[j] = sd;
  }
  return s;
}

std::vector<double> Standardizer::apply(const std::vector<double>& x) const {
  check_input(x, mean.size());
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / scale[j];
  return z;
}

json Standardizer::to_json() const { return json{{"mean", mean}, {"scale", scale}}; }

Standardizer Standardizer::from_json(const json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.scale.size()) throw ModelError("standardiser sizes differ");
  for (double v : s.scale)
    if (!(v > 0)) throw ModelError("standardiser scale must be positive");
  return s;
}

std::unique_ptr<LogisticRegression> LogisticRegression::train(const Rows& x, const std::vector<int>& y, double l2,
                                                              int max_iter) {
  check_training_set(x, y);
  if (l2 < 0) throw ModelError("l2 must be non-negative");
  auto m = std::make_unique<LogisticRegression>();
  m->std_ = Standardizer::fit(x);
  const auto n = x.size(), d = x[0].size();
  Eigen::MatrixXd X(n, d + 1);
  Eigen::VectorXd t(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = m->std_.apply(x[i]);
    for (std::size_t j = 0; j < d; ++j) X(i, j) = z[j];
    X(i, d) = 1.0;
    t(i) = y[i];
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, l2);
  penalty(d) = 0;
  auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = X * b;
    double nll = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = eta(i);
      // log(1 + exp(e)) - t e, computed stably
      nll += (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e))) - t(i) * e;
    }
    return nll + 0.5 * b.cwiseProduct(penalty).dot(b);
  };
  double f = objective(beta);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd p(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      p(i) = sigmoid(eta(i));
      w(i) = std::max(p(i) * (1 - p(i)), 1e-10);
    }
    const Eigen::VectorXd grad = X.transpose() * (p - t) + penalty.cwiseProduct(beta);
    Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
    H.diagonal() += penalty;
    H.diagonal().array() += 1e-9;
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    double a = 1.0, nf = f;
    Eigen::VectorXd next = beta;
    for (int k = 0; k < 30; ++k, a /= 2) {
      next = beta - a * step;
      nf = objective(next);
      if (nf <= f) break;
    }
    if (!(nf <= f)) break;
    beta = next;
    const double change = f - nf;
    f = nf;
    if (change < 1e-10 * (1 + std::abs(f))) break;
  }
  m->w_.assign(beta.data(), beta.data() + d);
  m->b_ = beta(d);
  return m;
}

double LogisticRegression::predict(const std::vector<double>& x) const {
  const auto z = std_.apply(x);
  double e = b_;
  for (std::size_t j = 0; j < z.size(); ++j) e += w_[j] * z[j];
  return sigmoid(e);
}

json LogisticRegression::to_json() const {
  return json{{"kind", std::string(to_string(kind()))}, {"standardizer", std_.to_json()}, {"weights", w_},
              {"intercept", b_}};
}

std::unique_ptr<LogisticRegression> LogisticRegression::from_json(const json& j) {
  auto m = std::make_unique<LogisticRegression>();
  m->std_ = Standardizer::from_json(j.at("standardizer"));
  m->w_ = j.at("weights").get<std::vector<double>>();
  m->b_ = j.at("intercept").get<double>();
  if (m->w_.size() != m->std_.mean.size()) throw ModelError("logistic weights do not match inputs");
  return m;
}

std::unique_ptr<NaiveBayes> NaiveBayes::train(const Rows& x, const std::vector<int>& y, double min_std) {
  check_training_set(x, y);
  auto m = std::make_unique<NaiveBayes>();
  const auto d = x[0].size();
  std::array<double, 2> count{0, 0};
  for (int v : y) count[static_cast<std::size_t>(v)] += 1;
  for (std::size_t c = 0; c < 2; ++c) {
    m->log_prior_[c] = std::log(count[c] / static_cast<double>(y.size()));
    m->mean_[c].assign(d, 0.0);
    m->std_[c].assign(d, 0.0);
  }
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col;
    for (const auto& r : x) col.push_back(r[j]);
    std::sort(col.begin(), col.end());
    col.erase(std::unique(col.begin(), col.end()), col.end());
    const double precision = col.size() > 1 ? (col.back() - col.front()) / static_cast<double>(col.size() - 1) : 0.0;
    const double floor = std::max(min_std, precision / 6.0);
    for (std::size_t c = 0; c < 2; ++c) {
      double s = 0, q = 0;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (static_cast<std::size_t>(y[i]) == c) s += x[i][j];
      const double mu = s / count[c];
      for (std::size_t i = 0; i < x.size(); ++i)
        if (static_cast<std::size_t>(y[i]) == c) q += (x[i][j] - mu) * (x[i][j] - mu);
      m->mean_[c][j] = mu;
      m->std_[c][j] = std::max(floor, std::sqrt(q / count[c]));
    }
  }
  return m;
}

double NaiveBayes::predict(const std::vector<double>& x) const {
  check_input(x, mean_[0].size());
  std::array<double, 2> ll = log_prior_;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double z = (x[j] - mean_[c][j]) / std_[c][j];
      ll[c] += -0.5 * z * z - std::log(std_[c][j]);
    }
  return sigmoid(ll[1] - ll[0]);
}

json NaiveBayes::to_json() const {
  return json{{"kind", std::string(to_string(kind()))},
              {"log_prior", log_prior_},
              {"mean", {mean_[0], mean_[1]}},
              {"std", {std_[0], std_[1]}}};
}

std::unique_ptr<NaiveBayes> NaiveBayes::from_json(const json& j) {
  auto m = std::make_unique<NaiveBayes>();
  m->log_prior_ = j.at("log_prior").get<std::array<double, 2>>();
  for (std::size_t c = 0; c < 2; ++c) {
    m->mean_[c] = j.at("mean").at(c).get<std::vector<double>>();
    m->std_[c] = j.at("std").at(c).get<std::vector<double>>();
    if (m->std_[c].size() != m->mean_[c].size() || m->mean_[c].size() != m->mean_[0].size())
      throw ModelError("naive Bayes parameter sizes differ");
    for (double s : m->std_[c])
      if (!(s > 0)) throw ModelError("naive Bayes deviation must be positive");
  }
  return m;
}

}  // namespace chanaudit
