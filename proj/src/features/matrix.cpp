#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "chanaudit/csv.hpp"
#include "chanaudit/features.hpp"

namespace chanaudit {

using nlohmann::json;

namespace {

double population_variance(const std::vector<double>& xs) {
  if (xs.empty()) return 0;
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> FeatureMatrix::column(std::size_t j) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(j));
  return out;
}

Preprocessing Preprocessing::fit(const FeatureMatrix& m, double variance_floor) {
  Preprocessing p;
  p.variance_floor = variance_floor;
  p.input_names = m.names;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double var = population_variance(m.column(j));
    if (m.size() > 0 && var >= variance_floor && var > 0) {
      p.kept.push_back(m.names[j]);
      p.keep_index_.push_back(j);
    } else {
      p.dropped.push_back({m.names[j], var});
    }
  }
  if (p.kept.empty()) throw std::invalid_argument("variance filter dropped every feature");
  return p;
}

std::vector<double> Preprocessing::apply(const std::vector<double>& row) const {
  if (row.size() != input_names.size())
    throw std::invalid_argument("row has " + std::to_string(row.size()) + " features, expected " +
                                std::to_string(input_names.size()));
  std::vector<double> out;
  out.reserve(keep_index_.size());
  for (auto j : keep_index_) out.push_back(row[j]);
  return out;
}

FeatureMatrix Preprocessing::apply(const FeatureMatrix& m) const {
  if (m.names != input_names) throw std::invalid_argument("matrix columns do not match the fitted feature names");
  FeatureMatrix out;
  out.names = kept;
  out.channel_ids = m.channel_ids;
  out.labels = m.labels;
  for (const auto& r : m.rows) out.rows.push_back(apply(r));
  return out;
}

json to_json(const Preprocessing& p) {
  json dropped = json::array();
  for (const auto& d : p.dropped) dropped.push_back({{"name", d.name}, {"variance", d.variance}});
  return json{{"variance_floor", p.variance_floor}, {"input_names", p.input_names}, {"kept", p.kept},
              {"dropped", dropped}};
}

Preprocessing preprocessing_from_json(const json& j) {
  Preprocessing p;
  p.variance_floor = j.at("variance_floor").get<double>();
  p.input_names = j.at("input_names").get<std::vector<std::string>>();
  p.kept = j.at("kept").get<std::vector<std::string>>();
  for (const auto& d : j.at("dropped")) p.dropped.push_back({d.at("name").get<std::string>(), d.at("variance").get<double>()});
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < p.input_names.size(); ++i) index.emplace(p.input_names[i], i);
  for (const auto& k : p.kept) {
    auto it = index.find(k);
    if (it == index.end()) throw std::invalid_argument("kept feature '" + k + "' missing from input names");
    p.keep_index_.push_back(it->second);
  }
  return p;
}

FeaturePipeline FeaturePipeline::fit(const std::vector<const ChannelRecord*>& channels,
                                     const std::vector<const ChannelAnalytics*>& analytics, const FeatureSpec& spec) {
  if (channels.size() != analytics.size()) throw std::invalid_argument("channels and analytics differ in length");
  spec.validate();
  FeaturePipeline p;
  p.spec = spec;
  p.vocab = Vocabularies::build(channels);
  FeatureMatrix raw;
  raw.names = feature_names(spec, p.vocab);
  for (std::size_t i = 0; i < channels.size(); ++i)
    raw.rows.push_back(extract(*channels[i], *analytics[i], spec, p.vocab).values);
  p.prep = Preprocessing::fit(raw, spec.variance_floor);
  return p;
}

std::vector<double> FeaturePipeline::transform(const ChannelRecord& c, const ChannelAnalytics& a) const {
  return prep.apply(extract(c, a, spec, vocab).values);
}

FeatureMatrix FeaturePipeline::transform(const std::vector<const ChannelRecord*>& channels,
                                         const std::vector<const ChannelAnalytics*>& analytics,
                                         const std::vector<int>& labels) const {
  if (channels.size() != analytics.size()) throw std::invalid_argument("channels and analytics differ in length");
  FeatureMatrix m;
  m.names = prep.kept;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    m.channel_ids.push_back(channels[i]->channel_id);
    m.rows.push_back(transform(*channels[i], *analytics[i]));
    m.labels.push_back(i < labels.size() ? labels[i] : -1);
  }
  return m;
}

json to_json(const FeaturePipeline& p) {
  return json{{"spec", to_json(p.spec)}, {"vocabularies", to_json(p.vocab)}, {"preprocessing", to_json(p.prep)}};
}

FeaturePipeline feature_pipeline_from_json(const json& j) {
  FeaturePipeline p;
  p.spec = feature_spec_from_json(j.at("spec"));
  p.vocab = vocabularies_from_json(j.at("vocabularies"));
  p.prep = preprocessing_from_json(j.at("preprocessing"));
  if (feature_names(p.spec, p.vocab) != p.prep.input_names)
    throw std::invalid_argument("feature pipeline names do not match its spec and vocabularies");
  return p;
}

void write_matrix_csv(const FeatureMatrix& m, std::ostream& out) {
  std::vector<std::string> header = {"channel_id", "label"};
  header.insert(header.end(), m.names.begin(), m.names.end());
  csv::write_row(out, header);
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    std::vector<std::string> f;
    f.push_back(i < m.channel_ids.size() ? m.channel_ids[i] : "");
    const int l = i < m.labels.size() ? m.labels[i] : -1;
    f.push_back(l < 0 ? "" : std::string(to_string(static_cast<ChannelClass>(l))));
    for (double v : m.rows[i]) f.push_back(format_double(v));
    csv::write_row(out, f);
  }
}

FeatureMatrix read_matrix_csv(std::istream& in) {
  auto t = csv::Table::read(in);
  const auto& h = t.header();
  if (h.size() < 2 || h[0] != "channel_id" || h[1] != "label")
    throw csv::ParseError(1, "feature matrix must start with channel_id,label columns");
  FeatureMatrix m;
  m.names.assign(h.begin() + 2, h.end());
  for (const auto& row : t.rows()) {
    if (row.fields.size() != h.size()) throw csv::ParseError(row.line, "wrong number of fields");
    m.channel_ids.push_back(row.fields[0]);
    if (row.fields[1].empty()) {
      m.labels.push_back(-1);
    } else {
      auto c = parse_channel_class(row.fields[1]);
      if (!c) throw csv::ParseError(row.line, "unknown label '" + row.fields[1] + "'");
      m.labels.push_back(static_cast<int>(*c));
    }
    std::vector<double> vals;
    for (std::size_t j = 2; j < row.fields.size(); ++j) {
      try {
        vals.push_back(std::stod(row.fields[j]));
      } catch (const std::exception&) {
        throw csv::ParseError(row.line, "non-numeric value in column " + h[j]);
      }
    }
    m.rows.push_back(std::move(vals));
  }
  return m;
}

}  // namespace chanaudit
