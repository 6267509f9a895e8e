#include <algorithm>
#include <cmath>
#include <numeric>

#include "internal.hpp"

namespace chanaudit {

using nlohmann::json;

MLP::MLP(std::size_t inputs, std::size_t hidden, std::uint64_t seed) : in_(inputs), hid_(hidden) {
  if (inputs == 0 || hidden == 0) throw ModelError("network layers must be non-empty");
  p_.assign(hid_ * in_ + hid_ + 2 * hid_ + 2, 0.0);
  std::mt19937_64 rng(seed);
  const double a1 = std::sqrt(6.0 / static_cast<double>(in_ + hid_));
  const double a2 = std::sqrt(6.0 / static_cast<double>(hid_ + 2));
  std::uniform_real_distribution<double> u1(-a1, a1), u2(-a2, a2);
  for (std::size_t k = 0; k < hid_ * in_; ++k) p_[k] = u1(rng);
  const std::size_t w2 = hid_ * in_ + hid_;
  for (std::size_t k = 0; k < 2 * hid_; ++k) p_[w2 + k] = u2(rng);
  std_.mean.assign(in_, 0.0);
  std_.scale.assign(in_, 1.0);
}

std::array<double, 2> MLP::logits(const std::vector<double>& z, std::vector<double>* hidden_out) const {
  const double* W1 = p_.data();
  const double* b1 = W1 + hid_ * in_;
  const double* W2 = b1 + hid_;
  const double* b2 = W2 + 2 * hid_;
  std::vector<double> h(hid_);
  for (std::size_t k = 0; k < hid_; ++k) {
    double a = b1[k];
    const double* row = W1 + k * in_;
    for (std::size_t j = 0; j < in_; ++j) a += row[j] * z[j];
    h[k] = 1.0 / (1.0 + std::exp(-a));
  }
  std::array<double, 2> o{b2[0], b2[1]};
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t k = 0; k < hid_; ++k) o[c] += W2[c * hid_ + k] * h[k];
  if (hidden_out) *hidden_out = std::move(h);
  return o;
}

double MLP::loss(const Rows& xs, const std::vector<int>& y, double l2, std::vector<double>* grad) const {
  if (xs.empty() || xs.size() != y.size()) throw ModelError("loss needs matching non-empty rows and labels");
  if (grad) grad->assign(p_.size(), 0.0);
  const double n = static_cast<double>(xs.size());
  const std::size_t ob1 = hid_ * in_, ow2 = ob1 + hid_, ob2 = ow2 + 2 * hid_;
  double total = 0;
  std::vector<double> h, dh(hid_);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto o = logits(xs[i], &h);
    const double mx = std::max(o[0], o[1]);
    const double lse = mx + std::log(std::exp(o[0] - mx) + std::exp(o[1] - mx));
    const auto t = static_cast<std::size_t>(y[i]);
    total += lse - o[t];
    if (!grad) continue;
    auto& g = *grad;
    std::array<double, 2> d{std::exp(o[0] - lse), std::exp(o[1] - lse)};
    d[t] -= 1.0;
    for (std::size_t c = 0; c < 2; ++c) {
      g[ob2 + c] += d[c] / n;
      for (std::size_t k = 0; k < hid_; ++k) g[ow2 + c * hid_ + k] += d[c] * h[k] / n;
    }
    for (std::size_t k = 0; k < hid_; ++k) {
      const double back = d[0] * p_[ow2 + k] + d[1] * p_[ow2 + hid_ + k];
      dh[k] = back * h[k] * (1 - h[k]) / n;
      g[ob1 + k] += dh[k];
      double* row = g.data() + k * in_;
      for (std::size_t j = 0; j < in_; ++j) row[j] += dh[k] * xs[i][j];
    }
  }
  double reg = 0;
  for (std::size_t k = 0; k < ob1; ++k) reg += p_[k] * p_[k];
  for (std::size_t k = ow2; k < ob2; ++k) reg += p_[k] * p_[k];
  if (grad) {
    for (std::size_t k = 0; k < ob1; ++k) (*grad)[k] += l2 * p_[k];
    for (std::size_t k = ow2; k < ob2; ++k) (*grad)[k] += l2 * p_[k];
  }
  return total / n + 0.5 * l2 * reg;
}

std::unique_ptr<MLP> MLP::train(const Rows& x, const std::vector<int>& y, const Hyperparams& h, std::uint64_t seed) {
  detail::check_training_set(x, y);
  const auto& c = h.mlp;
  if (c.hidden < 1 || c.epochs < 1 || c.batch < 1 || !(c.learning_rate > 0))
    throw ModelError("invalid network hyperparameters");
  auto m = std::make_unique<MLP>(x[0].size(), static_cast<std::size_t>(c.hidden), derive_seed(seed, 0));
  m->std_ = Standardizer::fit(x);
  Rows z;
  z.reserve(x.size());
  for (const auto& r : x) z.push_back(m->std_.apply(r));
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::vector<double> velocity(m->p_.size(), 0.0), grad;
  const auto batch = static_cast<std::size_t>(c.batch);
  for (int e = 0; e < c.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < order.size(); s += batch) {
      Rows bx;
      std::vector<int> by;
      for (std::size_t k = s; k < std::min(order.size(), s + batch); ++k) {
        bx.push_back(z[order[k]]);
        by.push_back(y[order[k]]);
      }
      m->loss(bx, by, c.l2, &grad);
      for (std::size_t k = 0; k < m->p_.size(); ++k) {
        velocity[k] = c.momentum * velocity[k] - c.learning_rate * grad[k];
        m->p_[k] += velocity[k];
      }
    }
  }
  for (double v : m->p_)
    if (!std::isfinite(v)) throw ModelError("network training diverged");
  return m;
}

double MLP::predict(const std::vector<double>& x) const {
  const auto o = logits(std_.apply(x), nullptr);
  return 1.0 / (1.0 + std::exp(o[0] - o[1]));
}

json MLP::to_json() const {
  return json{{"kind", std::string(to_string(kind()))},
              {"inputs", in_},
              {"hidden", hid_},
              {"standardizer", std_.to_json()},
              {"params", p_}};
}

std::unique_ptr<MLP> MLP::from_json(const json& j) {
  auto m = std::make_unique<MLP>(j.at("inputs").get<std::size_t>(), j.at("hidden").get<std::size_t>(), 0);
  m->std_ = Standardizer::from_json(j.at("standardizer"));
  auto p = j.at("params").get<std::vector<double>>();
  if (p.size() != m->p_.size() || m->std_.mean.size() != m->in_) throw ModelError("network parameter sizes differ");
  m->p_ = std::move(p);
  return m;
}

}  // namespace chanaudit
