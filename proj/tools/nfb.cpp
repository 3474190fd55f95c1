// nfb: run simulated neurofeedback sessions, serve the session backend,
// stream a simulated headband, and report on session logs.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "nfb/analytics.hpp"
#include "nfb/config.hpp"
#include "nfb/error.hpp"
#include "nfb/runner.hpp"
#include "nfb/services.hpp"
#include "nfb/session_log.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTimeout = 3;
constexpr int kExitCorruptLog = 4;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string profile;
  std::optional<double> duration_cap;
  std::string out_dir;
  std::string listen;
  std::string ws_listen;
  std::string device;
};

std::string default_out_dir() {
  if (const char* env = std::getenv("NFB_LOG_DIR"); env && *env) return env;
  return ".";
}

nfb::RunConfig build_config(const CommonOptions& o) {
  nfb::RunConfig cfg = o.config_path.empty() ? nfb::run_config_from_json(nlohmann::json::object())
                                             : nfb::load_run_config(o.config_path);
  if (!o.profile.empty()) {
    cfg.profile_name = o.profile;
    const auto seed = cfg.profile.seed;
    cfg.profile = nfb::builtin_profile(o.profile, seed);
    cfg.set_seed(seed);
  }
  if (o.seed) cfg.set_seed(*o.seed);
  if (o.duration_cap) cfg.duration_cap_s = *o.duration_cap;
  if (!o.listen.empty()) cfg.listen = o.listen;
  if (!o.ws_listen.empty()) cfg.ws_listen = o.ws_listen;
  if (!o.device.empty()) {
    const auto mode = nfb::parse_device_mode(o.device);
    if (!mode) throw nfb::Error(nfb::ErrorCode::Configuration, "--device must be simulator or passthrough");
    cfg.device = *mode;
  }
  if (!o.out_dir.empty()) {
    cfg.out_dir = o.out_dir;
  } else if (cfg.out_dir.empty()) {
    cfg.out_dir = default_out_dir();
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool with_network) {
  cmd->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Simulator and palette seed");
  cmd->add_option("--profile", o.profile, "Built-in attention profile: low, medium, high, rising, ou");
  cmd->add_option("--out", o.out_dir, "Directory for session logs (default $NFB_LOG_DIR or .)");
  cmd->add_option("--device", o.device, "Headband mode: simulator (raw EEG) or passthrough (device index)");
  if (with_network) {
    cmd->add_option("--listen", o.listen, "TCP listen address host:port");
    cmd->add_option("--ws-listen", o.ws_listen, "WebSocket listen address host:port, or off");
  }
}

int cmd_run(const CommonOptions& o, const std::string& format) {
  const nfb::RunConfig cfg = build_config(o);
  const auto wall0 = std::chrono::steady_clock::now();
  const auto result = nfb::run_simulated(cfg, {cfg.out_dir});
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  if (result.report) {
    if (format == "json") {
      nlohmann::json j = nfb::body_to_json(*result.report);
      if (result.log_path) j["log"] = result.log_path->string();
      std::cout << j.dump(2) << '\n';
    } else {
      std::cout << nfb::format_summary(*result.report);
    }
  } else {
    std::cout << "no training samples were recorded\n";
  }
  if (result.log_path) std::cerr << "log: " << result.log_path->string() << '\n';
  std::cerr << "simulated " << result.session_time_s << " s in " << wall << " s\n";
  return result.timed_out ? kExitTimeout : kExitOk;
}

std::atomic<bool> g_interrupted{false};

int cmd_serve(const CommonOptions& o, bool simulate, double speed, bool once) {
  const nfb::RunConfig cfg = build_config(o);
  boost::asio::io_context io;
  nfb::Backend backend(io, cfg, cfg.out_dir);
  backend.listen();
  std::cerr << "listening: tcp " << backend.tcp_port();
  if (backend.ws_port() != 0) std::cerr << ", websocket " << backend.ws_port();
  std::cerr << '\n';

  boost::asio::signal_set signals(io, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code& ec, int) {
    if (ec) return;
    g_interrupted = true;
    backend.shutdown("interrupted");
  });

  // Poll for the end of a session when asked to serve only one.
  std::optional<boost::asio::steady_timer> watch;
  std::function<void()> arm = [&] {
    watch->expires_after(std::chrono::milliseconds(50));
    watch->async_wait([&](const boost::system::error_code& ec) {
      if (ec) return;
      if (backend.phase() == nfb::SessionPhase::Conclusion) {
        backend.shutdown("completed");
        signals.cancel();
        return;
      }
      arm();
    });
  };
  if (once) {
    watch.emplace(io);
    arm();
  }

  std::thread headband;
  std::atomic<bool> stop_headband{false};
  if (simulate) {
    nfb::HeadbandOptions ho;
    ho.server = nfb::Endpoint{"127.0.0.1", backend.tcp_port()};
    ho.device = cfg.device;
    ho.speed = speed;
    ho.max_time_s = cfg.duration_cap_s;
    headband = std::thread([cfg, ho, &stop_headband] {
      try {
        nfb::run_headband(cfg, ho, &stop_headband);
      } catch (const std::exception& e) {
        std::cerr << "headband: " << e.what() << '\n';
      }
    });
  }
  io.run();
  stop_headband = true;
  if (headband.joinable()) headband.join();
  for (const auto& p : backend.log_paths()) std::cerr << "log: " << p.string() << '\n';
  return kExitOk;
}

int cmd_simulate(const CommonOptions& o, const std::string& connect, double speed, std::optional<double> max_time) {
  const nfb::RunConfig cfg = build_config(o);
  nfb::HeadbandOptions ho;
  ho.server = nfb::parse_endpoint(connect.empty() ? cfg.listen : connect);
  ho.device = cfg.device;
  ho.speed = speed;
  ho.max_time_s = max_time.value_or(cfg.duration_cap_s);
  std::signal(SIGINT, [](int) { g_interrupted = true; });
  const auto result = nfb::run_headband(cfg, ho, &g_interrupted);
  std::cerr << "sent " << result.messages_sent << " messages up to t=" << result.last_t << " s"
            << (result.saw_report ? ", session report received" : "") << '\n';
  return kExitOk;
}

std::vector<int> parse_groups(const std::string& text) {
  std::vector<int> groups;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int g = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      groups.push_back(g);
    } catch (const std::exception&) {
      throw nfb::Error(nfb::ErrorCode::Configuration, "--groups expects comma separated counts, e.g. 2,3,3");
    }
  }
  return groups;
}

int cmd_report(const std::vector<std::string>& files, const std::string& format, const std::string& groups_text,
               const std::string& stages) {
  if (stages != "raw" && stages != "smoothed") {
    throw nfb::Error(nfb::ErrorCode::Configuration, "--stages must be raw or smoothed");
  }
  const auto source = stages == "raw" ? nfb::StageSource::Raw : nfb::StageSource::Smoothed;
  std::vector<nfb::SessionLog> logs;
  std::vector<nfb::SessionMetrics> metrics;
  std::vector<nfb::SessionReportBody> summaries;
  bool corrupt = false;
  for (const auto& f : files) {
    try {
      auto log = nfb::read_session_log(f);
      auto m = nfb::compute_metrics(log, source);
      m.session = std::filesystem::path(f).stem().string();
      summaries.push_back(nfb::finalize_log(log));
      metrics.push_back(std::move(m));
      logs.push_back(std::move(log));
    } catch (const nfb::CorruptLogError& e) {
      corrupt = true;
      std::cerr << "corrupt log: " << e.what() << '\n';
      if (!e.lines().empty()) {
        std::cerr << "offending lines:";
        for (auto l : e.lines()) std::cerr << ' ' << l;
        std::cerr << '\n';
      }
    } catch (const nfb::Error& e) {
      if (e.code() != nfb::ErrorCode::NoData) throw;
      corrupt = true;
      std::cerr << "corrupt log: " << e.what() << '\n';
    }
  }
  if (corrupt) return kExitCorruptLog;

  const auto report = nfb::multi_session_report(metrics, parse_groups(groups_text));
  if (format == "csv") {
    std::cout << nfb::format_csv(report);
  } else if (format == "json") {
    std::cout << nfb::format_json(report, logs).dump(2) << '\n';
  } else {
    std::cout << nfb::format_table(report);
    for (std::size_t i = 0; i < summaries.size(); ++i) {
      std::cout << "\nS" << i + 1 << " " << metrics[i].session << '\n' << nfb::format_summary(summaries[i]);
      if (metrics[i].game_up_switches != metrics[i].up_switches ||
          metrics[i].game_down_switches != metrics[i].down_switches) {
        std::cout << "note: in-game (median filtered) stage switches differ from the raw-index count\n";
      }
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neurofeedback attention-training session tools"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string run_format = "table";
  auto* run = app.add_subcommand("run", "Run one simulated session end to end and write its log");
  add_common(run, run_opts, false);
  run->add_option("--duration-cap", run_opts.duration_cap, "Stop after this much session time (exit 3)");
  run->add_option("--format", run_format, "Summary format")->check(CLI::IsMember({"table", "json"}));

  CommonOptions serve_opts;
  bool serve_simulate = false;
  bool serve_once = false;
  double serve_speed = 1.0;
  auto* serve = app.add_subcommand("serve", "Start the session backend");
  add_common(serve, serve_opts, true);
  serve->add_option("--duration-cap", serve_opts.duration_cap, "Session time limit for the built-in headband");
  serve->add_flag("--simulate", serve_simulate, "Also stream a simulated headband into the backend");
  serve->add_option("--speed", serve_speed, "Simulated headband speed relative to real time (0 = unpaced)");
  serve->add_flag("--once", serve_once, "Exit after the first session concludes");

  CommonOptions sim_opts;
  std::string sim_connect;
  double sim_speed = 1.0;
  std::optional<double> sim_max_time;
  auto* simulate = app.add_subcommand("simulate", "Stream a simulated headband to a running backend");
  add_common(simulate, sim_opts, false);
  simulate->add_option("--connect", sim_connect, "Backend TCP address host:port");
  simulate->add_option("--speed", sim_speed, "Speed relative to real time (0 = unpaced)");
  simulate->add_option("--max-time", sim_max_time, "Stop after this much simulated time");

  std::vector<std::string> report_files;
  std::string report_format = "table";
  std::string report_groups;
  std::string report_stages = "raw";
  auto* report = app.add_subcommand("report", "Metrics and multi-session tables from session logs");
  report->add_option("logs", report_files, "Session log files (NDJSON)")->required();
  report->add_option("--format", report_format, "Output format")->check(CLI::IsMember({"table", "csv", "json"}));
  report->add_option("--groups", report_groups, "Sessions per group, e.g. 2,3,3");
  report->add_option("--stages", report_stages, "Stage classification source: raw or smoothed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts, run_format);
    if (*serve) return cmd_serve(serve_opts, serve_simulate, serve_speed, serve_once);
    if (*simulate) return cmd_simulate(sim_opts, sim_connect, sim_speed, sim_max_time);
    if (*report) return cmd_report(report_files, report_format, report_groups, report_stages);
  } catch (const nfb::CorruptLogError& e) {
    std::cerr << "corrupt log: " << e.what() << '\n';
    return kExitCorruptLog;
  } catch (const nfb::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == nfb::ErrorCode::Configuration || e.code() == nfb::ErrorCode::Validation ? kExitConfig
                                                                                                : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
