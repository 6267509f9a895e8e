#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chanaudit/corpus.hpp"
#include "chanaudit/learners.hpp"
#include "chanaudit/pipeline.hpp"

namespace chanaudit {

// ---- moderator decisions ----------------------------------------------------

enum class Decision { confirm_disturbing, confirm_suitable, needs_more_review };

std::string_view to_string(Decision d);
std::optional<Decision> parse_decision(std::string_view s);

struct ReviewDecision {
  std::string channel_id;
  Decision decision = Decision::needs_more_review;
  std::string moderator_id;
  std::string timestamp;  // ISO-8601 UTC, e.g. 2024-05-01T10:00:00Z
  std::optional<std::string> note;

  bool operator==(const ReviewDecision&) const = default;
};

nlohmann::json to_json(const ReviewDecision& d);
/// Throws std::invalid_argument on a malformed payload. An empty timestamp is allowed.
ReviewDecision review_decision_from_json(const nlohmann::json& j);

/// Current UTC time as YYYY-MM-DDTHH:MM:SS.mmmZ.
std::string utc_timestamp();

/// One active decision per (channel, moderator). Every write is appended to a
/// JSONL log; compact() rewrites the log as a snapshot of the active set.
class DecisionStore {
 public:
  enum class PutResult { created, replaced };

  /// Replays the log when it exists; an empty path keeps decisions in memory.
  explicit DecisionStore(std::filesystem::path path = {});

  /// Throws std::invalid_argument when the timestamp precedes the moderator's
  /// latest one. Fills an empty timestamp with the current time.
  PutResult put(ReviewDecision d);
  std::vector<ReviewDecision> all() const;
  std::vector<ReviewDecision> for_channel(const std::string& channel_id) const;
  /// Latest decision on the channel by timestamp, any moderator.
  std::optional<ReviewDecision> latest(const std::string& channel_id) const;
  /// Channels whose latest confirm_* decision sets a label: 1 disturbing, 0 suitable.
  std::map<std::string, int> label_overrides() const;
  /// channel_id,label rows with label "suitable" or "disturbing".
  std::string export_labels_csv() const;
  /// Number of writes accepted since construction or since the log was replayed.
  std::uint64_t sequence() const;
  void compact();

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, ReviewDecision> active_;
  std::map<std::string, std::string> last_ts_;
  std::uint64_t seq_ = 0;
  void apply(const ReviewDecision& d);
  void append(const ReviewDecision& d);
};

// ---- HTTP service -----------------------------------------------------------

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path corpus;
  CorpusFormat corpus_format = CorpusFormat::jsonl;
  std::filesystem::path model;
  std::filesystem::path decisions;
  std::size_t retrain_min_decisions = 1;
  Severity severity = Severity::prob;
  ModelKind kind = ModelKind::random_forest;
  Hyperparams hyper;
  std::uint64_t seed = 7;
  int folds = 10;  // cross-validation report on retrain; 0 skips it
  bool creation_time_only = false;
  std::optional<std::string> token;  // required as "Authorization: Bearer <token>" when set
};

/// Reads a JSON config; relative paths resolve against the file's directory.
ServiceConfig load_service_config(const std::filesystem::path& path);
ServiceConfig service_config_from_json(const nlohmann::json& j, const std::filesystem::path& base = {});

class ReviewService {
 public:
  using Trainer = std::function<TrainedModel(const LabeledChannels&)>;

  /// `model` may be empty; the queue then answers 409 until a retrain succeeds.
  ReviewService(ServiceConfig config, Corpus corpus, std::optional<TrainedModel> model);
  /// Loads corpus, model (when the file exists) and decisions from the config paths.
  static std::unique_ptr<ReviewService> from_config(const ServiceConfig& config);
  ~ReviewService();
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  /// Replaces the training step used by retrain jobs.
  void set_trainer(Trainer t);

  /// Binds and serves on a background thread; port 0 picks a free port. Returns the bound port.
  int start(int port = -1);
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();
  std::string endpoint() const;

  int model_version() const;
  /// Waits for any running retrain job to finish.
  void wait_for_jobs();

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace chanaudit
