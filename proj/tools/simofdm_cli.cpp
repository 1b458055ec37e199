// simofdm: link-level sweeps for the superposed IM-OFDM waveform.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "simofdm/config.hpp"
#include "simofdm/error.hpp"
#include "simofdm/experiment.hpp"
#include "simofdm/output.hpp"
#include "simofdm/selftest.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kIo = 3 };

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scale;
  std::optional<std::string> out;
  std::optional<std::string> rho;
  std::optional<std::string> snr;
  std::optional<std::string> channel;
  std::optional<std::string> doppler;
  std::optional<std::string> waveform;
  std::optional<int> trials;
  std::optional<int> threads;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_path, "key = value config file with [sections]");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--scale", f.scale, "paper or desk preset")->check(CLI::IsMember({"paper", "desk"}));
  app->add_option("--out", f.out, "output directory");
  app->add_option("--rho", f.rho, "power splitting ratios, e.g. 0.1,0.3 or 0.1:0.1:0.5");
  app->add_option("--snr", f.snr, "SNR points in dB, e.g. 0:2:30");
  app->add_option("--channel", f.channel, "channel model")->check(CLI::IsMember({"los", "rician", "rayleigh"}));
  app->add_option("--doppler", f.doppler, "time-varying channel")->check(CLI::IsMember({"on", "off"}));
  app->add_option("--waveform", f.waveform, "restrict to one waveform")->check(CLI::IsMember({"ofdm", "im", "sim"}));
  app->add_option("--trials", f.trials, "Monte Carlo trials per point");
  app->add_option("--threads", f.threads, "worker threads (0: all cores)");
}

simofdm::ExperimentConfig resolve(const Flags& f, const std::string& command) {
  using namespace simofdm;
  ExperimentConfig c = preset(f.scale ? parse_scale(*f.scale) : Scale::desk);
  if (!f.config_path.empty()) load_config_file(c, f.config_path, !f.scale.has_value());
  if (f.seed) c.seed = *f.seed;
  if (f.out) set_option(c, "output.dir", *f.out);
  if (f.rho) set_option(c, "sweep.rho", *f.rho);
  if (f.snr) set_option(c, "sweep.snr_db", *f.snr);
  if (f.channel) set_option(c, "channel.model", *f.channel);
  if (f.doppler) set_option(c, "channel.doppler", *f.doppler);
  if (f.waveform) set_option(c, "sweep.waveforms", *f.waveform);
  if (f.trials) set_option(c, "sweep.trials", std::to_string(*f.trials));
  if (f.threads) set_option(c, "sweep.threads", std::to_string(*f.threads));
  fill_defaults(c, command);
  c.validate();
  return c;
}

std::string output_name(const std::string& command, const simofdm::ExperimentConfig& c) {
  if (command == "ber")
    return std::string("ber-") + (c.channel.doppler ? "tv-" : "static-") + simofdm::to_string(c.channel.model);
  return command;
}

int run(const std::string& command, const Flags& flags, const std::string& command_line) {
  using namespace simofdm;
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = resolve(flags, command);
  if (command == "selftest") {
    const auto checks = run_selftest(cfg.seed);
    bool ok = true;
    for (const auto& r : checks) {
      std::printf("%s  %-50s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
      ok = ok && r.passed;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("selftest: %s in %.1f s\n", ok ? "all checks passed" : "FAILURES", secs);
    return ok ? kOk : kNumerical;
  }

  std::vector<ResultRow> rows;
  std::string log;
  if (command == "ber") rows = run_ber_sweep(cfg);
  else if (command == "rmse") rows = run_rmse_sweep(cfg);
  else if (command == "sinr") rows = run_sinr_report(cfg);
  else if (command == "crlb") rows = run_crlb_report(cfg);
  else if (command == "demo") rows = run_demo(cfg, &log);

  if (!log.empty()) std::cout << log;
  const auto files = emit_results(rows, cfg.output_dir, output_name(command, cfg), cfg, command_line);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%zu rows -> %s (%.1f s)\n", rows.size(), files.csv.c_str(), secs);
  std::printf("series   -> %s\nmanifest -> %s\n", files.series.c_str(), files.manifest.c_str());
  for (const auto& chart : files.charts) std::printf("chart    -> %s\n", chart.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simofdm: superposed IM-OFDM sensing and communication simulator"};
  app.require_subcommand(1);
  Flags flags;
  const char* commands[][2] = {
      {"ber", "BER sweep (static or time-varying channel)"},
      {"rmse", "range/velocity RMSE sweep with CRLB rows"},
      {"sinr", "min-SINR, optimal rho and rho_max per channel draw"},
      {"crlb", "CRLB rows only"},
      {"demo", "one frame through sensing, pre-compensation and decoding"},
      {"selftest", "fast invariant suite"},
  };
  for (auto& c : commands) add_common(app.add_subcommand(c[0], c[1]), flags);

  std::string command_line;
  for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, flags, command_line);
  } catch (const simofdm::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const simofdm::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const simofdm::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfig;
  } catch (const simofdm::Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
