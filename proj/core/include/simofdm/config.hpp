#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "simofdm/channel.hpp"
#include "simofdm/sensing.hpp"
#include "simofdm/waveform.hpp"

namespace simofdm {

enum class Scale { paper, desk };
enum class WaveformKind { ofdm, im, sim };
enum class SnrReference { receiver, transmit };
enum class Estimator { matched_filter, music, fused };

std::string to_string(Scale s);
std::string to_string(WaveformKind w);
std::string to_string(SnrReference r);
std::string to_string(Estimator e);
/// Tag used in result rows: ofdm | im-ofdm | s-im-ofdm.
std::string waveform_tag(WaveformKind w);

Scale parse_scale(const std::string& text);
WaveformKind parse_waveform(const std::string& text);
SnrReference parse_snr_reference(const std::string& text);
Estimator parse_estimator(const std::string& text);

struct ChannelSettings {
  ChannelModel model = ChannelModel::rician;
  int paths = 8;
  int taps = 16;
  double velocity_std = 10.0;  // m/s
  double rice_factor = 2.0;
  bool doppler = false;
  bool couple_targets = true;  // echo targets are the comm paths
};

struct GridSettings {
  double range_min = 0.0;
  double range_max = 320.0;
  int range_points = 64;
  double velocity_min = -35.0;
  double velocity_max = 65.0;
  int velocity_points = 64;

  RangeVelocityGrid grid() const;
};

struct SensingSettings {
  GridSettings grid;
  std::vector<Target> targets{{{1.0, 0.0}, 15.0, 15.0}, {{1.0, 0.0}, 30.0, 5.0},
                              {{1.0, 0.0}, 45.0, 10.0}, {{1.0, 0.0}, 80.0, 10.0}};
  Estimator estimator = Estimator::fused;
  bool calibrated_prior = true;
  int calibration_trials = 50;
  double gate_cells = 5.0;
  bool isolated = true;  // each trial senses one target of the list
};

struct SinrSettings {
  double gc_db = -1.0;        // negative: take it from gc_source, else from a fresh sweep
  std::string gc_source;      // CSV of a previous `ber` run
  double doppler_error_hz = 20.0;
  int draws = 8;
};

struct ExperimentConfig {
  WaveformConfig waveform;
  ChannelSettings channel;
  SensingSettings sensing;
  SinrSettings sinr;
  Scale scale = Scale::desk;
  std::vector<double> snr_db;
  std::vector<double> rho;
  std::vector<WaveformKind> waveforms{WaveformKind::ofdm, WaveformKind::im, WaveformKind::sim};
  SnrReference snr_reference = SnrReference::receiver;
  int trials = 200;
  std::uint64_t seed = 20240601;
  int threads = 0;  // 0: hardware concurrency
  double target_ber = 1e-3;
  double noise_dbm = 0.0;  // recorded in the manifest only; simulations use SNR
  std::string output_dir = "results";
  bool svg = true;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Defaults for a scale; desk shrinks the frame to M = 64, N_s = 16.
ExperimentConfig preset(Scale scale);

/// Applies one `section.key = value` assignment. Throws ConfigError on unknown keys or bad values.
void set_option(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Reads a line-oriented `key = value` file with [sections] on top of `config`. A `sweep.scale`
/// entry that differs from config.scale resets to that preset first, unless honor_scale is false.
void load_config_file(ExperimentConfig& config, const std::string& path, bool honor_scale = true);

/// Fully resolved configuration in the same format load_config_file reads.
std::string dump_config(const ExperimentConfig& config);

std::vector<double> parse_number_list(const std::string& text);

}  // namespace simofdm
