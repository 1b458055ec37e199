#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "simofdm/compensation.hpp"
#include "simofdm/config.hpp"

namespace simofdm {

struct ResultRow {
  std::string experiment;
  std::string waveform;
  double rho = 0.0;
  double snr_db = 0.0;
  std::string metric;
  double value = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

/// Strict weak order over all key columns, then value.
bool row_less(const ResultRow& a, const ResultRow& b);

/// Fills an empty SNR / rho list with the default for a subcommand (ber, rmse, sinr, crlb, demo).
void fill_defaults(ExperimentConfig& config, const std::string& command);

/// Runs body(i) for i in [0, count) on `threads` workers (0: hardware concurrency).
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

/// Noise variance of the comm link for one waveform and channel draw at `snr_db`.
double comm_noise_var(const ExperimentConfig& config, WaveformKind kind, const ChannelMatrix& channel,
                      double inverse_norm_sq, double snr_db);

/// Draws a channel whose matrix is well conditioned; `rejected` counts redraws.
PathSet draw_channel(const ExperimentConfig& config, Rng& rng, ChannelMatrix& matrix, int* rejected = nullptr);

/// BER per (waveform, rho, SNR). Static channels use the exact compensator; with Doppler the
/// compensator is built from sensing the echo of the same frame.
std::vector<ResultRow> run_ber_sweep(const ExperimentConfig& config);

/// RMSE of matched-filter, MUSIC and fused estimates per (rho, SNR), with exclusion rates and CRLB rows.
std::vector<ResultRow> run_rmse_sweep(const ExperimentConfig& config);

/// Trial-averaged CRLB rows for the configured targets.
std::vector<ResultRow> run_crlb_report(const ExperimentConfig& config);

/// min-SINR versus rho, rho*, rho_max (time-varying and static forms) per channel draw.
std::vector<ResultRow> run_sinr_report(const ExperimentConfig& config);

/// One frame through the full chain; `log` receives a human-readable account.
std::vector<ResultRow> run_demo(const ExperimentConfig& config, std::string* log = nullptr);

/// BER curve of one waveform/rho series from result rows.
std::vector<BerPoint> ber_curve(const std::vector<ResultRow>& rows, const std::string& waveform, double rho);

/// G_c from the ofdm and im-ofdm BER curves in `rows`.
double measured_gain_db(const std::vector<ResultRow>& rows, double target_ber);

}  // namespace simofdm
