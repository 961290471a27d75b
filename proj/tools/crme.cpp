// Command-line front end: experiments, traces, verification and the oracle
// service.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "crme/experiment.hpp"
#include "crme/oracle_service.hpp"
#include "crme/trace_io.hpp"

namespace {

namespace fs = std::filesystem;

crme::OracleHttpServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

fs::path resolve_out(const std::string& flag, const crme::ExperimentConfig& config) {
  if (!flag.empty()) return flag;
  if (!config.output_dir.empty()) return config.output_dir;
  return "out/" + config.name;
}

crme::ExperimentConfig load(const std::string& path) {
  auto config = crme::load_config(path);
  crme::apply_environment_overrides(config);
  return config;
}

void print_weights(const char* label, const std::vector<double>& values) {
  std::printf("%-9s (", label);
  for (std::size_t i = 0; i < values.size(); ++i) std::printf("%s%.2f", i ? ", " : "", values[i]);
  std::printf(")\n");
}

int cmd_elicit(const std::string& config_path, const std::string& out_flag) {
  const auto config = load(config_path);
  const auto report = crme::run_elicit(config);
  const auto out = resolve_out(out_flag, config);
  crme::write_elicit_outputs(report, out);
  print_weights("true", report.truth.flat());
  print_weights("elicited", report.result.weights.flat());
  std::printf("l1_error  %.6g\nqueries   %zu\nwritten   %s\n", report.l1_error,
              report.result.query_count, out.string().c_str());
  return 0;
}

int cmd_trace(const std::string& config_path, std::size_t iterations, const std::string& out_flag) {
  const auto config = load(config_path);
  const auto out = resolve_out(out_flag, config);
  const auto result = crme::run_trace(config, iterations, out);
  for (const auto& row : result.trace) {
    std::printf("attr %zu iter %zu  l1 %.6g\n", row.attribute, row.iteration,
                row.l1_error.value_or(0.0));
  }
  std::printf("written %s\n", out.string().c_str());
  return 0;
}

int cmd_verify(const std::string& config_path, double grid) {
  const auto config = load(config_path);
  const auto report = crme::run_verify(config, grid);
  std::cout << crme::verify_to_json(report).dump(2) << '\n';
  return report.passed() ? 0 : 1;
}

int cmd_table(const std::string& preset_dir, const std::string& out_flag) {
  fs::path out = out_flag;
  if (out.empty()) {
    const char* env = std::getenv("CRME_OUTPUT_DIR");
    out = env && *env ? fs::path(env) : fs::path("out/paper-table");
  }
  const auto rows = crme::run_table(preset_dir, out);
  bool ok = true;
  for (const auto& row : rows) {
    std::printf("%-28s queries %3zu  l1 %.5f  %s\n", row.report.config.name.c_str(),
                row.report.result.query_count, row.report.l1_error, row.passed() ? "PASS" : "FAIL");
    print_weights("  true", row.report.truth.flat());
    print_weights("  elicited", row.report.result.weights.flat());
    ok = ok && row.passed();
  }
  std::printf("written %s\n", out.string().c_str());
  return ok ? 0 : 1;
}

int cmd_serve(const std::string& host, int port, const std::string& state,
              const std::string& cache, std::size_t snapshot_every, const std::string& cors) {
  crme::SessionManager::Options options;
  options.state_dir = state;
  options.cache_dir = cache;
  options.snapshot_every = snapshot_every;
  crme::SessionManager sessions(options);
  crme::OracleHttpServer server(sessions, cors);
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::printf("serving /v1 on %s:%d\n", host.c_str(), port);
  std::fflush(stdout);
  const bool ok = server.listen(host, port);
  g_server = nullptr;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost- and reward-aware metric elicitation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::size_t iterations = 0;
  double grid = 0.0005;
  std::string preset_dir = CRME_PRESET_DIR;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string state;
  std::string cache;
  std::size_t snapshot_every = 25;
  std::string cors = "*";

  auto* elicit = app.add_subcommand("elicit", "Elicit a metric with the simulated oracle");
  elicit->add_option("--config", config_path, "Experiment YAML")->required()->check(CLI::ExistingFile);
  elicit->add_option("--out", out, "Output directory");

  auto* trace = app.add_subcommand("trace", "Per-iteration trace with a fixed iteration budget");
  trace->add_option("--config", config_path, "Experiment YAML")->required()->check(CLI::ExistingFile);
  trace->add_option("--iterations", iterations, "Iterations per attribute")->required();
  trace->add_option("--out", out, "Output directory");

  auto* verify = app.add_subcommand("verify", "Check convergence against a grid search");
  verify->add_option("--config", config_path, "Experiment YAML")->required()->check(CLI::ExistingFile);
  verify->add_option("--grid", grid, "Grid resolution (<= epsilon / 2)");

  auto* table = app.add_subcommand("paper-table", "Run the four accuracy-table presets");
  table->add_option("--out", out, "Output directory");
  table->add_option("--presets", preset_dir, "Preset directory")->check(CLI::ExistingDirectory);

  auto* serve = app.add_subcommand("serve", "Run the HTTP oracle service");
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--state", state, "Directory for snapshots and the answer log");
  serve->add_option("--cache-dir", cache, "Distribution cache directory");
  serve->add_option("--snapshot-every", snapshot_every, "Events between snapshots");
  serve->add_option("--cors-origin", cors, "Allowed CORS origin");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*elicit) return cmd_elicit(config_path, out);
    if (*trace) return cmd_trace(config_path, iterations, out);
    if (*verify) return cmd_verify(config_path, grid);
    if (*table) return cmd_table(preset_dir, out);
    if (*serve) return cmd_serve(host, port, state, cache, snapshot_every, cors);
  } catch (const crme::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
