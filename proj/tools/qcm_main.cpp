// qcm: simulate cohorts of synthetic players, validate and serve metric
// logs, and compute the learning-analytics reports.
//
// Exit codes: 0 success, 1 validation/analysis failure, 2 usage error.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "qcm/analytics.hpp"
#include "qcm/ingest.hpp"
#include "qcm/log_store.hpp"
#include "qcm/metrics.hpp"
#include "qcm/reports.hpp"
#include "qcm/sim.hpp"
#include "qcm/stats.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAnalysisFailure = 1;
constexpr int kExitUsage = 2;

std::string fmt_pct(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qcm::ValidationError("cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw qcm::ValidationError("failed writing " + path.string());
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
};

int cmd_simulate(const SimulateArgs& args) {
  qcm::sim::SimConfig config = qcm::sim::load_config(args.config_path);
  std::string seed_source = "config";
  if (args.seed_override) {
    config.master_seed = *args.seed_override;
    seed_source = "flag";
  }

  const auto cohort = qcm::sim::simulate_cohort(config);
  const std::filesystem::path out_dir(args.out_dir);
  std::filesystem::create_directories(out_dir);

  // Per-player logs plus the merged one, all in (player_id, seq) order.
  std::string merged;
  std::string player_file;
  std::string current_player;
  auto flush_player = [&]() {
    if (!current_player.empty())
      write_text_file(out_dir / (current_player + ".qcmlog"), player_file);
    player_file.clear();
  };
  for (const auto& event : cohort.merged.events) {
    if (event.player_id != current_player) {
      flush_player();
      current_player = event.player_id;
    }
    const std::string line = qcm::metrics::serialize_event(event);
    player_file += line;
    merged += line;
  }
  flush_player();
  write_text_file(out_dir / "merged.qcmlog", merged);

  if (!cohort.paper_records.empty()) {
    std::ostringstream paper;
    qcm::analytics::write_paper_records_csv(cohort.paper_records, paper);
    write_text_file(out_dir / "paper_records.csv", paper.str());
  }

  qcm::analytics::GroupMap groups;
  for (const auto& profile : config.profiles) groups.group_of[profile.player_id] = profile.group;
  std::ostringstream group_csv;
  qcm::analytics::write_group_map_csv(groups, group_csv);
  write_text_file(out_dir / "group_map.csv", group_csv.str());

  nlohmann::ordered_json manifest{
      {"config", args.config_path},
      {"master_seed", config.master_seed},
      {"seed_source", seed_source},
      {"players", config.profiles.size()},
      {"scheduled_sessions", config.schedule.size()},
      {"events", cohort.merged.events.size()},
      {"paper_records", cohort.paper_records.size()},
  };
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "simulated " << config.profiles.size() << " players, "
            << cohort.merged.events.size() << " events, " << cohort.paper_records.size()
            << " paper records (seed " << config.master_seed << " from " << seed_source
            << ")\n";
  return kExitOk;
}

// --- validate ----------------------------------------------------------------

int cmd_validate(const std::string& log_path) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot open " << log_path << "\n";
    return kExitUsage;
  }
  const auto result = qcm::metrics::read_log(in, log_path);
  std::cout << result.doc.events.size() << " events, " << result.diagnostics.size()
            << " errors\n";
  for (const auto& diag : result.diagnostics)
    std::cerr << "line " << diag.line_number << ": " << diag.error.reason << " (byte "
              << diag.error.position << ")\n";
  for (const auto& problem : qcm::metrics::order_violations(result.doc))
    std::cerr << "warning: " << problem << "\n";
  return result.diagnostics.empty() ? kExitOk : kExitAnalysisFailure;
}

// --- report --------------------------------------------------------------------

struct ReportArgs {
  std::string log_path;
  std::string out_dir = ".";
  std::string group_map_path;
  std::string paper_records_path;
  bool students = false;
  bool cards = false;
  bool sessions = false;
  bool scatter = false;
  bool totals = false;
  bool bonus = false;
  std::string chi2;  // "a,b,c,d" or "auto"
  int questions_per_pickup = 2;
};

std::optional<qcm::stats::Table2x2> parse_chi2_counts(const std::string& raw) {
  std::array<double, 4> values{};
  std::size_t start = 0;
  for (int i = 0; i < 4; ++i) {
    const std::size_t comma = raw.find(',', start);
    const std::string field = raw.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (field.empty()) return std::nullopt;
    try {
      std::size_t used = 0;
      values[static_cast<std::size_t>(i)] = std::stod(field, &used);
      if (used != field.size()) return std::nullopt;
    } catch (...) {
      return std::nullopt;
    }
    if (comma == std::string::npos) {
      if (i != 3) return std::nullopt;
      start = raw.size();
    } else {
      if (i == 3) return std::nullopt;
      start = comma + 1;
    }
  }
  return qcm::stats::Table2x2{{{values[0], values[1]}, {values[2], values[3]}}};
}

int cmd_report(const ReportArgs& args) {
  if (!args.students && !args.cards && !args.sessions && !args.scatter && !args.totals &&
      !args.bonus && args.chi2.empty()) {
    std::cerr << "report: nothing selected (use --students/--cards/--sessions/--scatter/"
                 "--totals/--bonus/--chi2)\n";
    return kExitUsage;
  }
  std::ifstream in(args.log_path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot open " << args.log_path << "\n";
    return kExitUsage;
  }
  const auto read = qcm::metrics::read_log(in, args.log_path);
  if (!read.diagnostics.empty())
    std::cerr << "warning: " << read.diagnostics.size() << " malformed lines ignored\n";

  qcm::analytics::GroupMap groups;
  if (!args.group_map_path.empty()) {
    std::ifstream gm(args.group_map_path);
    if (!gm) {
      std::cerr << "cannot open " << args.group_map_path << "\n";
      return kExitUsage;
    }
    groups = qcm::analytics::load_group_map_csv(gm);
  }

  qcm::reports::ReportBundle bundle;
  if (args.students) bundle.students = qcm::analytics::all_student_reports(read.doc);
  if (args.cards) bundle.cards = qcm::analytics::card_error_rates(read.doc);
  if (args.sessions || !args.chi2.empty())
    bundle.sessions = qcm::analytics::reconstruct_sessions(read.doc).segments;
  if (args.scatter) {
    const auto scatter = qcm::analytics::success_vs_time(read.doc, groups);
    for (const auto& diag : scatter.diagnostics) std::cerr << "note: " << diag << "\n";
    bundle.scatter = scatter;
  }
  if (args.totals) {
    std::vector<qcm::cards::PaperAnswerRecord> paper;
    if (!args.paper_records_path.empty()) {
      std::ifstream pr(args.paper_records_path);
      if (!pr) {
        std::cerr << "cannot open " << args.paper_records_path << "\n";
        return kExitUsage;
      }
      paper = qcm::analytics::load_paper_records_csv(pr);
    }
    const auto totals = qcm::analytics::cohort_totals(read.doc, paper);
    bundle.totals = totals;
    std::cout << "totals: numerique " << totals.digital.unique_cards_correct << " unique ("
              << fmt_pct(totals.digital.error_rate * 100, 1)
              << "% errors), papier " << totals.paper.unique_cards_correct << " unique ("
              << fmt_pct(totals.paper.error_rate * 100, 1) << "% errors)";
    if (totals.relative_unique_difference)
      std::cout << ", numerique/papier "
                << fmt_pct(*totals.relative_unique_difference * 100, 1)
                << "% more unique cards";
    std::cout << "\n";
  }
  if (args.bonus) {
    const auto stats = qcm::analytics::bonus_capture_rate(read.doc, args.questions_per_pickup);
    bundle.bonus = stats;
    std::cout << "bonus: captured " << stats.captured << " of " << stats.available;
    if (stats.rate)
      std::cout << " (rate " << fmt_pct(*stats.rate, 4) << ")";
    else
      std::cout << " (rate undefined: nothing available)";
    std::cout << "\n";
  }

  if (!args.chi2.empty()) {
    std::optional<qcm::stats::Table2x2> table;
    if (args.chi2 == "auto") {
      if (groups.group_of.empty()) {
        std::cerr << "chi2: 'auto' needs --group-map\n";
        return kExitUsage;
      }
      table = qcm::analytics::chi2_counts_from_sessions(*bundle.sessions, groups);
    } else {
      table = parse_chi2_counts(args.chi2);
      if (!table) {
        std::cerr << "chi2: expected four comma-separated counts, e.g. 47,39,30,48\n";
        return kExitUsage;
      }
    }
    const auto result = qcm::stats::chi_squared_2x2(*table);
    std::printf("chi2: statistic=%.6f dof=%d p=%.6f\n", result.statistic,
                result.degrees_of_freedom, result.p_value);
  }
  if (!args.sessions) bundle.sessions.reset();  // only computed for chi2 auto

  qcm::reports::emit_reports(bundle, args.out_dir);
  return kExitOk;
}

// --- serve ---------------------------------------------------------------------

std::atomic<httplib::Server*> g_server{nullptr};

void handle_signal(int) {
  if (auto* server = g_server.load()) server->stop();
}

int cmd_serve(const std::string& listen, const std::string& log_dir) {
  const std::size_t colon = listen.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "serve: --listen expects host:port\n";
    return kExitUsage;
  }
  const std::string host = listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (...) {
    std::cerr << "serve: bad port in '" << listen << "'\n";
    return kExitUsage;
  }

  qcm::log_store::LogStore store(log_dir);
  httplib::Server server;
  qcm::ingest::attach_routes(server, store);

  if (port == 0) {
    port = server.bind_to_any_port(host);
    if (port < 0) {
      std::cerr << "serve: cannot bind " << listen << "\n";
      return kExitUsage;
    }
  } else if (!server.bind_to_port(host, port)) {
    std::cerr << "serve: cannot bind " << listen << "\n";
    return kExitUsage;
  }

  g_server.store(&server);
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  std::cout << "listening on " << host << ":" << port << ", logs in " << store.dir().string()
            << "\n";
  std::cout.flush();
  server.listen_after_bind();
  g_server.store(nullptr);
  store.flush_all();
  std::cout << "shut down\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serious-game card scheduler, telemetry and learning analytics toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  std::uint64_t seed_flag = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "run a synthetic cohort and write logs");
  sim_cmd->add_option("--config", sim_args.config_path, "cohort config (JSON)")->required();
  sim_cmd->add_option("--out", sim_args.out_dir, "output directory")->required();
  auto* seed_opt = sim_cmd->add_option("--seed", seed_flag, "master seed override");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "parse a log and report malformed lines");
  validate_cmd->add_option("log", validate_path, "log file (.qcmlog)")->required();

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "compute analytics artifacts from a log");
  report_cmd->add_option("--log", report_args.log_path, "input log file")->required();
  report_cmd->add_option("--out", report_args.out_dir, "output directory (default .)");
  report_cmd->add_option("--group-map", report_args.group_map_path, "player_id,group CSV");
  report_cmd->add_option("--paper-records", report_args.paper_records_path,
                         "worksheet answer records CSV");
  report_cmd->add_flag("--students", report_args.students, "per-student table");
  report_cmd->add_flag("--cards", report_args.cards, "per-card error rates");
  report_cmd->add_flag("--sessions", report_args.sessions, "session segments + timeline");
  report_cmd->add_flag("--scatter", report_args.scatter, "success vs median time SVG");
  report_cmd->add_flag("--totals", report_args.totals, "per-context totals");
  report_cmd->add_flag("--bonus", report_args.bonus, "bonus capture rate");
  report_cmd->add_option("--chi2", report_args.chi2,
                         "2x2 counts 'a,b,c,d', or 'auto' to tally sessions per group per week");
  report_cmd->add_option("--questions-per-pickup", report_args.questions_per_pickup,
                         "answers per key/bonus pickup (default 2)");

  std::string listen = "127.0.0.1:8090";
  std::string log_dir;
  auto* serve_cmd = app.add_subcommand("serve", "run the telemetry ingestion endpoint");
  serve_cmd->add_option("--listen", listen, "host:port (port 0 picks a free one)");
  serve_cmd->add_option("--log-dir", log_dir, "store directory (default $QCM_LOG_DIR or ./qcm_logs)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints help or the error
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim_cmd->parsed()) {
      if (seed_opt->count() > 0) sim_args.seed_override = seed_flag;
      return cmd_simulate(sim_args);
    }
    if (validate_cmd->parsed()) return cmd_validate(validate_path);
    if (report_cmd->parsed()) return cmd_report(report_args);
    if (serve_cmd->parsed()) {
      if (log_dir.empty()) {
        const char* env = std::getenv("QCM_LOG_DIR");
        log_dir = env && *env ? env : "./qcm_logs";
      }
      return cmd_serve(listen, log_dir);
    }
  } catch (const qcm::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAnalysisFailure;
  }
  return kExitUsage;
}
