#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "chanaudit/stats.hpp"

namespace chanaudit {

using nlohmann::json;

std::string_view to_string(KSMethod m) { return m == KSMethod::exact ? "exact" : "asymptotic"; }

std::uint64_t ks_scaled_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS test needs non-empty samples");
  for (double v : a)
    if (std::isnan(v)) throw std::invalid_argument("KS sample contains NaN");
  for (double v : b)
    if (std::isnan(v)) throw std::invalid_argument("KS sample contains NaN");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto n1 = static_cast<std::int64_t>(a.size()), n2 = static_cast<std::int64_t>(b.size());
  std::int64_t i = 0, j = 0, best = 0;
  while (i < n1 || j < n2) {
    double x;
    if (j >= n2 || (i < n1 && a[i] <= b[j]))
      x = a[i];
    else
      x = b[j];
    while (i < n1 && a[i] == x) ++i;
    while (j < n2 && b[j] == x) ++j;
    best = std::max(best, std::abs(i * n2 - j * n1));
  }
  return static_cast<std::uint64_t>(best);
}

double kolmogorov_q(double lambda) {
  if (lambda <= 0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi form converges fast for small lambda.
    const double pi = 3.14159265358979323846;
    double s = 0;
    for (int j = 1; j <= 50; ++j) {
      const double k = 2.0 * j - 1.0;
      s += std::exp(-k * k * pi * pi / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

double ks_asymptotic_p(double d, std::size_t n1, std::size_t n2) {
  const double en = std::sqrt(static_cast<double>(n1) * static_cast<double>(n2) / static_cast<double>(n1 + n2));
  const double p = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
  return std::max(p, std::numeric_limits<double>::min());
}

double ks_exact_p(std::uint64_t scaled, std::size_t n1, std::size_t n2) {
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("KS exact p needs non-empty samples");
  if (scaled == 0) return 1.0;
  const auto m = static_cast<std::int64_t>(n1), n = static_cast<std::int64_t>(n2);
  const auto thr = static_cast<std::int64_t>(scaled);
  auto log_choose = [](double a, double b) { return std::lgamma(a + b + 1) - std::lgamma(a + 1) - std::lgamma(b + 1); };
  const double log_total = log_choose(static_cast<double>(m), static_cast<double>(n));
  // alive[j]: number of paths to (i, j) that have not yet touched the boundary.
  std::vector<double> alive(static_cast<std::size_t>(n + 1), 0.0);
  double hit = 0;
  for (std::int64_t i = 0; i <= m; ++i) {
    for (std::int64_t j = 0; j <= n; ++j) {
      double v;
      if (i == 0 && j == 0)
        v = 1.0;
      else
        v = (i > 0 ? alive[static_cast<std::size_t>(j)] : 0.0) + (j > 0 ? alive[static_cast<std::size_t>(j - 1)] : 0.0);
      if (std::abs(i * n - j * m) >= thr) {
        if (v > 0) {
          const double rest = log_choose(static_cast<double>(m - i), static_cast<double>(n - j));
          hit += std::exp(std::log(v) + rest - log_total);
        }
        v = 0;
      }
      alive[static_cast<std::size_t>(j)] = v;
    }
  }
  return std::clamp(hit, std::numeric_limits<double>::min(), 1.0);
}

KSResult ks_two_sample(std::vector<double> a, std::vector<double> b, std::optional<KSMethod> force) {
  KSResult r;
  r.n1 = a.size();
  r.n2 = b.size();
  const auto scaled = ks_scaled_statistic(std::move(a), std::move(b));
  const double nn = static_cast<double>(r.n1) * static_cast<double>(r.n2);
  r.d_statistic = static_cast<double>(scaled) / nn;
  r.method = force ? *force : (nn <= static_cast<double>(kExactKSLimit) ? KSMethod::exact : KSMethod::asymptotic);
  r.p_value = r.method == KSMethod::exact ? ks_exact_p(scaled, r.n1, r.n2) : ks_asymptotic_p(r.d_statistic, r.n1, r.n2);
  return r;
}

json to_json(const KSRow& r) {
  return json{{"feature", r.feature},
              {"p_value", r.result.p_value},
              {"d_statistic", r.result.d_statistic},
              {"n_suitable", r.result.n1},
              {"n_disturbing", r.result.n2},
              {"method", std::string(to_string(r.result.method))},
              {"mean_suitable", r.mean_suitable},
              {"mean_disturbing", r.mean_disturbing}};
}

std::vector<KSRow> ks_count_table(const Corpus& corpus) {
  const auto prop = propagate_labels(corpus);
  struct Col {
    const char* name;
    std::optional<double> (*get)(const ChannelRecord&);
  };
  static const Col cols[] = {
      {"videoCount", [](const ChannelRecord& c) -> std::optional<double> { return double(c.video_count); }},
      {"viewCount", [](const ChannelRecord& c) -> std::optional<double> { return double(c.view_count); }},
      {"subscriptionCount", [](const ChannelRecord& c) -> std::optional<double> { return double(c.subscription_count); }},
      {"subscriberCount",
       [](const ChannelRecord& c) -> std::optional<double> {
         if (c.hidden_subscribers || !c.subscriber_count) return std::nullopt;
         return double(*c.subscriber_count);
       }},
      {"descriptionCharCount",
       [](const ChannelRecord& c) -> std::optional<double> { return double(c.description_char_count); }},
      {"keywordsCount", [](const ChannelRecord& c) -> std::optional<double> { return double(c.keywords.size()); }},
      {"topicCount", [](const ChannelRecord& c) -> std::optional<double> { return double(c.topic_categories.size()); }},
      {"postCount", [](const ChannelRecord& c) -> std::optional<double> { return double(c.post_count); }},
  };
  std::vector<KSRow> out;
  for (const auto& col : cols) {
    std::vector<double> s, d;
    for (const auto& c : corpus.channels()) {
      auto it = prop.labels.find(c.channel_id);
      if (it == prop.labels.end()) continue;
      auto v = col.get(c);
      if (!v) continue;
      (it->second.value == ChannelClass::disturbing ? d : s).push_back(*v);
    }
    if (s.empty() || d.empty()) throw std::invalid_argument(std::string("KS table: a class has no values for ") + col.name);
    KSRow row;
    row.feature = col.name;
    row.mean_suitable = std::accumulate(s.begin(), s.end(), 0.0) / double(s.size());
    row.mean_disturbing = std::accumulate(d.begin(), d.end(), 0.0) / double(d.size());
    row.result = ks_two_sample(std::move(s), std::move(d));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace chanaudit
