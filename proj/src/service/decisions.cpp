#include <chrono>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

#include "chanaudit/service.hpp"

namespace chanaudit {

using nlohmann::json;

namespace {

// Accepts YYYY-MM-DDTHH:MM:SS with optional fraction and a Z suffix; returns millisecond form.
std::string normalise_timestamp(const std::string& ts) {
  static const std::regex re(R"((\d{4}-\d{2}-\d{2})T(\d{2}:\d{2}:\d{2})(?:\.(\d{1,9}))?Z)");
  std::smatch m;
  if (!std::regex_match(ts, m, re)) throw std::invalid_argument("timestamp must look like 2024-05-01T10:00:00Z");
  std::string frac = m[3].matched ? m[3].str() : "";
  frac.resize(3, '0');
  return m[1].str() + "T" + m[2].str() + "." + frac.substr(0, 3) + "Z";
}

}  // namespace

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::confirm_disturbing: return "confirm_disturbing";
    case Decision::confirm_suitable: return "confirm_suitable";
    case Decision::needs_more_review: return "needs_more_review";
  }
  return "?";
}

std::optional<Decision> parse_decision(std::string_view s) {
  for (auto d : {Decision::confirm_disturbing, Decision::confirm_suitable, Decision::needs_more_review})
    if (to_string(d) == s) return d;
  return std::nullopt;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

json to_json(const ReviewDecision& d) {
  json j{{"channel_id", d.channel_id},
         {"decision", std::string(to_string(d.decision))},
         {"moderator_id", d.moderator_id},
         {"timestamp", d.timestamp}};
  j["note"] = d.note ? json(*d.note) : json(nullptr);
  return j;
}

ReviewDecision review_decision_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("decision must be a JSON object");
  auto str = [&](const char* k, bool required) -> std::string {
    if (!j.contains(k) || j[k].is_null()) {
      if (required) throw std::invalid_argument(std::string("missing field ") + k);
      return {};
    }
    if (!j[k].is_string()) throw std::invalid_argument(std::string(k) + " must be a string");
    return j[k].get<std::string>();
  };
  ReviewDecision d;
  d.channel_id = str("channel_id", false);
  const auto dec = str("decision", true);
  auto parsed = parse_decision(dec);
  if (!parsed) throw std::invalid_argument("unknown decision '" + dec + "'");
  d.decision = *parsed;
  d.moderator_id = str("moderator_id", true);
  if (d.moderator_id.empty()) throw std::invalid_argument("moderator_id must not be empty");
  d.timestamp = str("timestamp", false);
  if (!d.timestamp.empty()) d.timestamp = normalise_timestamp(d.timestamp);
  if (j.contains("note") && !j["note"].is_null()) d.note = str("note", false);
  return d;
}

DecisionStore::DecisionStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      apply(review_decision_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      // A torn final line from an interrupted write is dropped.
      if (in.peek() == EOF) break;
      throw std::runtime_error(path_.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
}

void DecisionStore::apply(const ReviewDecision& d) {
  active_[{d.channel_id, d.moderator_id}] = d;
  auto& last = last_ts_[d.moderator_id];
  if (d.timestamp > last) last = d.timestamp;
  ++seq_;
}

void DecisionStore::append(const ReviewDecision& d) {
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  out << to_json(d).dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("cannot append to " + path_.string());
}

DecisionStore::PutResult DecisionStore::put(ReviewDecision d) {
  if (d.channel_id.empty() || d.moderator_id.empty()) throw std::invalid_argument("decision needs channel and moderator");
  std::lock_guard lk(mu_);
  if (d.timestamp.empty()) d.timestamp = utc_timestamp();
  if (auto it = last_ts_.find(d.moderator_id); it != last_ts_.end() && d.timestamp < it->second)
    throw std::invalid_argument("timestamp precedes moderator's latest decision at " + it->second);
  const bool existed = active_.contains({d.channel_id, d.moderator_id});
  append(d);
  apply(d);
  return existed ? PutResult::replaced : PutResult::created;
}

std::vector<ReviewDecision> DecisionStore::all() const {
  std::lock_guard lk(mu_);
  std::vector<ReviewDecision> out;
  for (const auto& [k, d] : active_) out.push_back(d);
  return out;
}

std::vector<ReviewDecision> DecisionStore::for_channel(const std::string& channel_id) const {
  std::lock_guard lk(mu_);
  std::vector<ReviewDecision> out;
  for (auto it = active_.lower_bound({channel_id, ""}); it != active_.end() && it->first.first == channel_id; ++it)
    out.push_back(it->second);
  return out;
}

std::optional<ReviewDecision> DecisionStore::latest(const std::string& channel_id) const {
  std::optional<ReviewDecision> best;
  for (auto& d : for_channel(channel_id))
    if (!best || d.timestamp > best->timestamp) best = d;
  return best;
}

std::map<std::string, int> DecisionStore::label_overrides() const {
  std::map<std::string, ReviewDecision> newest;
  for (const auto& d : all()) {
    if (d.decision == Decision::needs_more_review) continue;
    auto it = newest.find(d.channel_id);
    if (it == newest.end() || d.timestamp > it->second.timestamp) newest[d.channel_id] = d;
  }
  std::map<std::string, int> out;
  for (const auto& [id, d] : newest) out[id] = d.decision == Decision::confirm_disturbing ? 1 : 0;
  return out;
}

std::string DecisionStore::export_labels_csv() const {
  std::ostringstream out;
  out << "channel_id,label\n";
  for (const auto& [id, v] : label_overrides())
    out << id << ',' << to_string(v ? ChannelClass::disturbing : ChannelClass::suitable) << '\n';
  return out.str();
}

std::uint64_t DecisionStore::sequence() const {
  std::lock_guard lk(mu_);
  return seq_;
}

void DecisionStore::compact() {
  std::lock_guard lk(mu_);
  if (path_.empty()) return;
  std::vector<const ReviewDecision*> ds;
  for (const auto& [k, d] : active_) ds.push_back(&d);
  std::stable_sort(ds.begin(), ds.end(), [](auto* a, auto* b) { return a->timestamp < b->timestamp; });
  const auto tmp = path_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    for (auto* d : ds) out << to_json(*d).dump() << '\n';
    if (!out) throw std::runtime_error("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path_);
}

}  // namespace chanaudit
