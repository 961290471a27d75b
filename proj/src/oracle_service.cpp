#include "crme/oracle_service.hpp"

#include <chrono>
#include <random>
#include <sstream>

#include "httplib.h"

#include "crme/error.hpp"
#include "crme/trace_io.hpp"

namespace crme {

using nlohmann::json;

namespace {

constexpr const char* kLogFile = "answers.log";
constexpr const char* kSnapshotFile = "snapshot.json";

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::string random_id() {
  static std::mutex mutex;
  static std::random_device device;
  std::lock_guard lock(mutex);
  std::ostringstream out;
  for (int i = 0; i < 4; ++i) {
    char buffer[9];
    std::snprintf(buffer, sizeof buffer, "%08x", static_cast<unsigned>(device()));
    out << buffer;
  }
  return out.str();
}

const char* mode_name(SessionMode mode) {
  return mode == SessionMode::human ? "human" : "simulated-replay";
}

json card(const ClassifierStats& stats, const AttributeSchema& schema,
          std::span<const double> priors) {
  json accuracies = json::array();
  json rewards = json::array();
  json costs = json::array();
  for (std::size_t i = 0; i < schema.dimension(); ++i) {
    const double value = stats.at(schema, i);
    switch (schema.kind(i)) {
      case AttributeKind::accuracy:
        accuracies.push_back({{"label", schema.label(i)}, {"value", value}, {"cap", priors[i]}});
        break;
      case AttributeKind::reward:
      case AttributeKind::cost: {
        const auto range = schema.range(i);
        json entry = {{"label", schema.label(i)},
                      {"value", value},
                      {"lower", range.lower},
                      {"upper", range.upper}};
        (schema.kind(i) == AttributeKind::reward ? rewards : costs).push_back(entry);
        break;
      }
    }
  }
  return {{"accuracies", accuracies}, {"rewards", rewards}, {"costs", costs}};
}

}  // namespace

SessionParams session_params_from_json(const json& body) {
  try {
    if (!body.is_object()) throw ParameterError("request body must be an object");
    SessionParams params;
    params.schema = AttributeSchema(body.at("num_classes").get<std::size_t>(),
                                    body.value("reward_bounds", std::vector<double>{}),
                                    body.value("cost_bounds", std::vector<double>{}));
    if (body.contains("epsilon") && body.contains("iterations")) {
      throw ParameterError("set either epsilon or iterations, not both");
    }
    params.stopping = body.contains("iterations")
                          ? StoppingRule::iterations(body.at("iterations").get<std::size_t>())
                          : StoppingRule::tolerance(body.value("epsilon", 0.001));
    const json dist = body.value("distribution", json::object());
    params.distribution.seed = dist.value("seed", std::uint64_t{0});
    params.distribution.num_samples = dist.value("num_samples", std::size_t{100'000});
    params.distribution.feature_dim = dist.value("feature_dim", std::size_t{10});
    params.distribution.weight_scale = dist.value("weight_scale", 1.5);
    params.distribution.num_classes = params.schema.num_classes();
    if (params.distribution.num_samples < 1 || params.distribution.feature_dim < 1 ||
        !(params.distribution.weight_scale > 0.0)) {
      throw ParameterError("invalid distribution parameters");
    }
    const std::string mode = body.value("mode", std::string("human"));
    if (mode == "human") {
      params.mode = SessionMode::human;
    } else if (mode == "simulated-replay") {
      params.mode = SessionMode::simulated_replay;
    } else {
      throw ParameterError("mode must be 'human' or 'simulated-replay'");
    }
    if (body.contains("true_weights") && !body.at("true_weights").is_null()) {
      auto weights = body.at("true_weights").get<std::vector<double>>();
      const auto w = WeightVector::from_flat(params.schema, weights);
      if (!w.is_normalized()) throw ParameterError("true_weights must sum to 1");
      params.true_weights = std::move(weights);
    }
    return params;
  } catch (const ParameterError& e) {
    throw ServiceError(400, "invalid_request", e.what());
  } catch (const json::exception& e) {
    throw ServiceError(400, "invalid_request", e.what());
  }
}

json session_params_to_json(const SessionParams& params) {
  json j = {{"num_classes", params.schema.num_classes()},
            {"reward_bounds", params.schema.reward_bounds()},
            {"cost_bounds", params.schema.cost_bounds()},
            {"distribution",
             {{"seed", params.distribution.seed},
              {"num_samples", params.distribution.num_samples},
              {"feature_dim", params.distribution.feature_dim},
              {"weight_scale", params.distribution.weight_scale}}},
            {"mode", mode_name(params.mode)}};
  j.update(stopping_to_json(params.stopping));
  if (params.true_weights) j["true_weights"] = *params.true_weights;
  return j;
}

ClassifierStats stats_from_card(const json& card) {
  ClassifierStats stats;
  for (const auto& a : card.at("accuracies")) stats.accuracies.push_back(a.at("value").get<double>());
  for (const auto& r : card.at("rewards")) stats.rewards.push_back(r.at("value").get<double>());
  for (const auto& c : card.at("costs")) stats.costs.push_back(c.at("value").get<double>());
  return stats;
}

struct SessionManager::Session {
  Session(std::string session_id, SessionParams session_params, ElicitationState initial)
      : id(std::move(session_id)), params(std::move(session_params)), state(std::move(initial)) {}

  std::string id;
  SessionParams params;
  ElicitationState state;
  std::optional<QueryBatch> batch;
  std::vector<bool> buffered;
  std::vector<bool> answers;
  json audit = json::array();
  double created = 0.0;
  double updated = 0.0;
  std::size_t last_seq = 0;
  mutable std::mutex mutex;

  std::size_t answered() const { return answers.size(); }
  std::size_t total() const { return expected_total_queries(state.schema, state.stopping); }

  void refresh_batch() {
    batch.reset();
    auto next = next_queries(state);
    if (auto* pending = std::get_if<QueryBatch>(&next)) batch = std::move(*pending);
  }

  json progress() const {
    return {{"answered", answered()},
            {"total_queries", total()},
            {"finished", state.finished()},
            {"attribute", state.finished() ? json(nullptr) : json(state.current_attribute)},
            {"interval", {state.interval.lower, state.interval.upper}},
            {"estimate", weights_to_json(state.schema, current_estimate(state))}};
  }
};

SessionManager::SessionManager() : SessionManager(Options{}) {}

SessionManager::SessionManager(Options options) : options_(std::move(options)) {
  if (options_.snapshot_every == 0) options_.snapshot_every = 1;
  if (!options_.state_dir.empty()) {
    std::filesystem::create_directories(options_.state_dir);
    restore();
    log_.open(options_.state_dir / kLogFile, std::ios::app);
    if (!log_) throw ParameterError("cannot open answer log in " + options_.state_dir.string());
  }
}

SessionManager::~SessionManager() {
  if (!options_.state_dir.empty()) {
    try {
      snapshot();
    } catch (...) {
    }
  }
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "not_found", "no session '" + id + "'");
  return it->second;
}

std::shared_ptr<const SyntheticDistribution> SessionManager::distribution_for(
    const DistributionParams& params) {
  const std::string key = cache_file_name(params);
  std::lock_guard lock(cache_mutex_);
  auto& slot = distributions_[key];
  if (!slot) {
    slot = std::make_shared<const SyntheticDistribution>(
        load_or_generate(params, options_.cache_dir));
  }
  return slot;
}

std::shared_ptr<SessionManager::Session> SessionManager::make_session(
    const std::string& id, const SessionParams& params, double created) {
  std::optional<WeightVector> truth;
  if (params.true_weights) truth = WeightVector::from_flat(params.schema, *params.true_weights);
  auto session = std::make_shared<Session>(
      id, params,
      start(params.schema, distribution_for(params.distribution), params.stopping, truth));
  session->created = created;
  session->updated = created;
  session->audit.push_back({{"event", "create"}, {"time", created}});
  session->refresh_batch();
  return session;
}

void SessionManager::apply_answer(Session& session, bool prefers_first, double when) {
  session.buffered.push_back(prefers_first);
  session.answers.push_back(prefers_first);
  session.updated = when;
  session.audit.push_back({{"event", "answer"},
                           {"index", session.answers.size() - 1},
                           {"prefers_first", prefers_first},
                           {"time", when}});
  if (session.buffered.size() == 4) {
    BatchAnswers batch{session.batch->sequence, {}};
    for (std::size_t i = 0; i < 4; ++i) batch.answers[i].prefers_first = session.buffered[i];
    session.buffered.clear();
    advance(session.state, batch);
    session.audit.push_back({{"event", "advance"},
                             {"query_count", session.state.query_count},
                             {"interval", {session.state.interval.lower, session.state.interval.upper}},
                             {"time", when}});
    session.refresh_batch();
  }
}

std::size_t SessionManager::append_log(const json& event) {
  std::lock_guard lock(log_mutex_);
  const std::size_t seq = next_seq_++;
  if (log_.is_open()) {
    json line = event;
    line["seq"] = seq;
    log_ << line.dump() << '\n';
    log_.flush();
  }
  return seq;
}

void SessionManager::maybe_snapshot() {
  if (options_.state_dir.empty()) return;
  if (++events_since_snapshot_ >= options_.snapshot_every) {
    events_since_snapshot_ = 0;
    snapshot();
  }
}

json SessionManager::create(const json& body) {
  const SessionParams params = session_params_from_json(body);
  const double created = now_seconds();
  std::string id = random_id();
  auto session = make_session(id, params, created);
  {
    std::lock_guard lock(session->mutex);
    session->last_seq = append_log({{"event", "create"},
                                    {"id", id},
                                    {"params", session_params_to_json(params)},
                                    {"time", created}});
  }
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(id, session);
  }
  maybe_snapshot();
  return {{"id", id},
          {"total_queries", session->total()},
          {"mode", mode_name(params.mode)},
          {"schema", schema_to_json(params.schema)},
          {"stopping", stopping_to_json(params.stopping)}};
}

json SessionManager::query(const std::string& id, bool debug) const {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  if (!session->batch) {
    return {{"status", "done"},
            {"answered", session->answered()},
            {"total_queries", session->total()},
            {"weights", weights_to_json(session->state.schema, current_estimate(session->state))}};
  }
  const auto& batch = *session->batch;
  const std::size_t pair_index = session->buffered.size();
  const auto [first, second] = batch.pair(pair_index);
  const auto& schema = session->state.schema;
  const auto priors = session->state.distribution->priors();
  json out = {{"status", "pending"},
              {"query_index", session->answered()},
              {"total_queries", session->total()},
              {"attribute", batch.attribute},
              {"label", schema.label(batch.attribute)},
              {"pair_index", pair_index},
              {"first", card(first, schema, priors)},
              {"second", card(second, schema, priors)}};
  if (debug) {
    out["debug"] = {{"points", {batch.points[pair_index], batch.points[pair_index + 1]}},
                    {"interval", {session->state.interval.lower, session->state.interval.upper}}};
  }
  return out;
}

json SessionManager::answer(const std::string& id, const json& body) {
  auto session = find(id);
  json progress;
  {
    std::lock_guard lock(session->mutex);
    if (!session->batch) {
      throw ServiceError(409, "session_finished", "session has no outstanding query");
    }
    if (!body.is_object() || !body.contains("prefers_first") || !body["prefers_first"].is_boolean()) {
      throw ServiceError(400, "invalid_request", "body needs a boolean 'prefers_first'");
    }
    if (body.contains("query_index")) {
      const json& index = body["query_index"];
      if (!index.is_number_integer() || index.get<std::int64_t>() < 0 ||
          index.get<std::size_t>() != session->answered()) {
        throw ServiceError(409, "answer_conflict",
                           "query " + std::to_string(session->answered()) + " is outstanding");
      }
    }
    const bool prefers_first = body["prefers_first"].get<bool>();
    const double when = now_seconds();
    const std::size_t seq = append_log(
        {{"event", "answer"}, {"id", id}, {"prefers_first", prefers_first}, {"time", when}});
    apply_answer(*session, prefers_first, when);
    session->last_seq = seq;
    progress = session->progress();
  }
  maybe_snapshot();
  return progress;
}

json SessionManager::estimate(const std::string& id) const {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  return session->progress();
}

json SessionManager::trace(const std::string& id) const {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  return trace_to_json(session->state.schema, session->state.trace);
}

std::string SessionManager::trace_csv(const std::string& id) const {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  return trace_to_csv(session->state.schema, session->state.trace);
}

json SessionManager::export_report(const std::string& id) const {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  const auto& state = session->state;
  json out = {{"id", session->id},
              {"params", session_params_to_json(session->params)},
              {"answered", session->answered()},
              {"total_queries", session->total()},
              {"finished", state.finished()},
              {"weights", weights_to_json(state.schema, current_estimate(state))},
              {"answers", session->answers},
              {"priors", std::vector<double>(state.distribution->priors().begin(),
                                             state.distribution->priors().end())},
              {"trace", trace_to_json(state.schema, state.trace)},
              {"created", session->created},
              {"updated", session->updated}};
  if (state.truth) out["l1_error"] = l1_distance(current_estimate(state), *state.truth);
  return out;
}

json SessionManager::session_state(const std::string& id) const {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  return {{"id", session->id},
          {"params", session_params_to_json(session->params)},
          {"state", state_to_json(session->state)},
          {"buffered", session->buffered},
          {"answers", session->answers},
          {"audit", session->audit},
          {"created", session->created},
          {"updated", session->updated},
          {"last_seq", session->last_seq}};
}

std::vector<std::string> SessionManager::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

void SessionManager::snapshot() {
  if (options_.state_dir.empty()) return;
  std::lock_guard guard(snapshot_mutex_);
  std::vector<std::shared_ptr<Session>> sessions;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [_, s] : sessions_) sessions.push_back(s);
  }
  json out = {{"version", 1}, {"sessions", json::array()}};
  for (const auto& s : sessions) out["sessions"].push_back(session_state(s->id));

  const auto path = options_.state_dir / kSnapshotFile;
  const auto temp = options_.state_dir / (std::string(kSnapshotFile) + ".tmp");
  {
    std::ofstream file(temp, std::ios::trunc);
    if (!file) throw ParameterError("cannot write snapshot in " + options_.state_dir.string());
    file << out.dump() << '\n';
  }
  std::filesystem::rename(temp, path);
}

void SessionManager::restore() {
  const auto snapshot_path = options_.state_dir / kSnapshotFile;
  if (std::ifstream in(snapshot_path); in) {
    const json snap = json::parse(in);
    for (const auto& entry : snap.at("sessions")) {
      SessionParams params = session_params_from_json(entry.at("params"));
      auto distribution = distribution_for(params.distribution);
      auto session = std::make_shared<Session>(entry.at("id").get<std::string>(), params,
                                               state_from_json(entry.at("state"), distribution));
      session->buffered = entry.at("buffered").get<std::vector<bool>>();
      session->answers = entry.at("answers").get<std::vector<bool>>();
      session->audit = entry.at("audit");
      session->created = entry.at("created").get<double>();
      session->updated = entry.at("updated").get<double>();
      session->last_seq = entry.at("last_seq").get<std::size_t>();
      session->refresh_batch();
      next_seq_ = std::max(next_seq_, session->last_seq + 1);
      sessions_.emplace(session->id, std::move(session));
    }
  }

  std::ifstream log(options_.state_dir / kLogFile);
  std::string line;
  while (std::getline(log, line)) {
    if (line.empty()) continue;
    json event;
    try {
      event = json::parse(line);
    } catch (const json::parse_error&) {
      break;  // torn final write
    }
    const std::size_t seq = event.at("seq").get<std::size_t>();
    next_seq_ = std::max(next_seq_, seq + 1);
    const auto id = event.at("id").get<std::string>();
    const auto type = event.at("event").get<std::string>();
    const double when = event.at("time").get<double>();
    if (type == "create") {
      if (sessions_.count(id)) continue;
      auto session = make_session(id, session_params_from_json(event.at("params")), when);
      session->last_seq = seq;
      sessions_.emplace(id, std::move(session));
    } else if (type == "answer") {
      const auto it = sessions_.find(id);
      if (it == sessions_.end()) continue;
      Session& session = *it->second;
      if (seq <= session.last_seq) continue;
      apply_answer(session, event.at("prefers_first").get<bool>(), when);
      session.last_seq = seq;
    }
  }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.status(), e.code(), e.what());
    } catch (const json::parse_error& e) {
      send_error(res, 400, "invalid_json", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

OracleHttpServer::OracleHttpServer(SessionManager& sessions, std::string cors_origin)
    : sessions_(sessions), server_(std::make_unique<httplib::Server>()) {
  server_->set_default_headers({{"Access-Control-Allow-Origin", cors_origin},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server_->Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  const std::string session_path = R"(/v1/sessions/([A-Za-z0-9]+))";
  server_->Post("/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, 201, sessions_.create(json::parse(req.body)));
                }));
  server_->Get(session_path + "/query",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const bool debug = req.has_param("debug") && req.get_param_value("debug") == "1";
                 send_json(res, 200, sessions_.query(req.matches[1], debug));
               }));
  server_->Post(session_path + "/answer",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, 200, sessions_.answer(req.matches[1], json::parse(req.body)));
                }));
  server_->Get(session_path + "/estimate",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, sessions_.estimate(req.matches[1]));
               }));
  server_->Get(session_path + "/trace",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 if (req.has_param("format") && req.get_param_value("format") == "csv") {
                   res.set_content(sessions_.trace_csv(req.matches[1]), "text/csv");
                 } else {
                   send_json(res, 200, sessions_.trace(req.matches[1]));
                 }
               }));
  server_->Get(session_path + "/export",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, sessions_.export_report(req.matches[1]));
               }));
  server_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty() && res.status == 404) {
      send_error(res, 404, "not_found", "no such endpoint");
    }
  });
}

OracleHttpServer::~OracleHttpServer() = default;

bool OracleHttpServer::listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

int OracleHttpServer::bind_any_port(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool OracleHttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void OracleHttpServer::stop() { server_->stop(); }

void OracleHttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace crme
