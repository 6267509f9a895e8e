#include <fstream>
#include <stdexcept>

#include "chanaudit/service.hpp"

namespace chanaudit {

using nlohmann::json;

ServiceConfig service_config_from_json(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw std::invalid_argument("service config must be a JSON object");
  ServiceConfig c;
  auto path = [&](const char* key) -> std::filesystem::path {
    if (!j.contains(key) || j[key].is_null()) return {};
    std::filesystem::path p = j[key].get<std::string>();
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  c.host = j.value("host", c.host);
  c.port = j.value("port", c.port);
  c.corpus = path("corpus");
  if (j.contains("corpus_format")) {
    auto f = parse_corpus_format(j["corpus_format"].get<std::string>());
    if (!f) throw std::invalid_argument("unknown corpus_format");
    c.corpus_format = *f;
  }
  c.model = path("model");
  c.decisions = path("decisions");
  c.retrain_min_decisions = j.value("retrain_min_decisions", c.retrain_min_decisions);
  if (j.contains("severity")) {
    auto s = parse_severity(j["severity"].get<std::string>());
    if (!s) throw std::invalid_argument("severity must be prob or prob_times_count");
    c.severity = *s;
  }
  if (j.contains("kind")) {
    auto k = parse_model_kind(j["kind"].get<std::string>());
    if (!k) throw std::invalid_argument("unknown model kind");
    c.kind = *k;
  }
  if (j.contains("hyper")) c.hyper = hyperparams_from_json(j["hyper"]);
  c.seed = j.value("seed", c.seed);
  c.folds = j.value("folds", c.folds);
  c.creation_time_only = j.value("creation_time_only", c.creation_time_only);
  if (j.contains("token") && !j["token"].is_null()) c.token = j["token"].get<std::string>();
  if (c.port < 0 || c.port > 65535) throw std::invalid_argument("port out of range");
  if (c.folds == 1 || c.folds < 0) throw std::invalid_argument("folds must be 0 or at least 2");
  return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return service_config_from_json(j, path.parent_path());
}

}  // namespace chanaudit
