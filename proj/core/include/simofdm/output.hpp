#pragma once

#include <string>
#include <vector>

#include "simofdm/config.hpp"
#include "simofdm/experiment.hpp"

namespace simofdm {

inline constexpr const char* kCsvHeader = "experiment,waveform,rho,snr_db,metric,value,trials,seed";

/// CSV text of the rows in deterministic order.
std::string format_csv(std::vector<ResultRow> rows);

/// Parses CSV written by format_csv.
std::vector<ResultRow> parse_csv(const std::string& text);
std::vector<ResultRow> read_csv(const std::string& path);

struct EmittedFiles {
  std::string csv;
  std::string series;
  std::string manifest;
  std::vector<std::string> charts;
};

/// Writes <dir>/<name>.csv, <name>.series.csv, <name>.manifest.ini and optional SVG charts.
/// Throws InputError on empty rows and IoError when a file cannot be written.
EmittedFiles emit_results(const std::vector<ResultRow>& rows, const std::string& dir, const std::string& name,
                          const ExperimentConfig& config, const std::string& command_line);

}  // namespace simofdm
