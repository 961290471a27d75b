#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "crme/distribution.hpp"
#include "crme/elicitation.hpp"

namespace httplib {
class Server;
}

namespace crme {

/// Error surfaced to HTTP clients as {"error": {"code": ..., "message": ...}}.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

enum class SessionMode { human, simulated_replay };

struct SessionParams {
  AttributeSchema schema{2, {}, {}};
  DistributionParams distribution;
  StoppingRule stopping = StoppingRule::tolerance(0.001);
  SessionMode mode = SessionMode::human;
  std::optional<std::vector<double>> true_weights;
};

/// Parses a create-session body. Missing distribution fields fall back to
/// seed 0, 100000 samples, feature_dim 10, weight_scale 1.5.
SessionParams session_params_from_json(const nlohmann::json& body);
nlohmann::json session_params_to_json(const SessionParams& params);

/// Rebuilds the statistics shown on one classifier card of a query payload.
ClassifierStats stats_from_card(const nlohmann::json& card);

/**
 * In-memory registry of elicitation sessions.
 *
 * The four comparisons of a batch are handed out one at a time and answers
 * are buffered until the batch is complete, then the engine advances. With a
 * state directory every create and answer is appended to answers.log and a
 * snapshot.json is rewritten every `snapshot_every` events; constructing a
 * manager on an existing directory restores the snapshot and replays the
 * log tail.
 */
class SessionManager {
 public:
  struct Options {
    std::filesystem::path state_dir;
    std::size_t snapshot_every = 25;
    std::filesystem::path cache_dir;
  };

  SessionManager();
  explicit SessionManager(Options options);
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// Returns {"id", "total_queries", ...}.
  nlohmann::json create(const nlohmann::json& body);
  nlohmann::json query(const std::string& id, bool debug = false) const;
  /// Body: {"prefers_first": bool, "query_index": optional int}.
  nlohmann::json answer(const std::string& id, const nlohmann::json& body);
  nlohmann::json estimate(const std::string& id) const;
  nlohmann::json trace(const std::string& id) const;
  std::string trace_csv(const std::string& id) const;
  nlohmann::json export_report(const std::string& id) const;

  /// Engine state plus answer buffer; used to check restores.
  nlohmann::json session_state(const std::string& id) const;
  std::vector<std::string> session_ids() const;
  void snapshot();

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  std::shared_ptr<const SyntheticDistribution> distribution_for(const DistributionParams& params);
  std::shared_ptr<Session> make_session(const std::string& id, const SessionParams& params,
                                        double created);
  void apply_answer(Session& session, bool prefers_first, double when);
  std::size_t append_log(const nlohmann::json& event);
  void maybe_snapshot();
  void restore();

  Options options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;

  std::mutex cache_mutex_;
  std::map<std::string, std::shared_ptr<const SyntheticDistribution>> distributions_;

  std::mutex log_mutex_;
  std::ofstream log_;
  std::size_t next_seq_ = 1;
  std::atomic<std::size_t> events_since_snapshot_{0};
  std::mutex snapshot_mutex_;
};

/// The /v1 HTTP front end over a SessionManager.
class OracleHttpServer {
 public:
  explicit OracleHttpServer(SessionManager& sessions, std::string cors_origin = "*");
  ~OracleHttpServer();

  /// Binds and serves until stop(); returns false when binding fails.
  bool listen(const std::string& host, int port);
  /// Binds to an ephemeral port and returns it (or -1).
  int bind_any_port(const std::string& host);
  /// Serves on a socket bound by bind_any_port.
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  SessionManager& sessions_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace crme
