#include "simofdm/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "format.hpp"
#include "simofdm/error.hpp"

namespace simofdm {

std::string to_string(Scale s) { return s == Scale::paper ? "paper" : "desk"; }

std::string to_string(WaveformKind w) {
  switch (w) {
    case WaveformKind::ofdm: return "ofdm";
    case WaveformKind::im: return "im";
    case WaveformKind::sim: return "sim";
  }
  return "?";
}

std::string waveform_tag(WaveformKind w) {
  switch (w) {
    case WaveformKind::ofdm: return "ofdm";
    case WaveformKind::im: return "im-ofdm";
    case WaveformKind::sim: return "s-im-ofdm";
  }
  return "?";
}

std::string to_string(SnrReference r) { return r == SnrReference::receiver ? "receiver" : "transmit"; }

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::matched_filter: return "mf";
    case Estimator::music: return "music";
    case Estimator::fused: return "fused";
  }
  return "?";
}

Scale parse_scale(const std::string& t) {
  if (t == "paper") return Scale::paper;
  if (t == "desk") return Scale::desk;
  throw ConfigError("scale: expected paper|desk, got '" + t + "'");
}

WaveformKind parse_waveform(const std::string& t) {
  if (t == "ofdm") return WaveformKind::ofdm;
  if (t == "im" || t == "im-ofdm") return WaveformKind::im;
  if (t == "sim" || t == "s-im-ofdm") return WaveformKind::sim;
  throw ConfigError("waveform: expected ofdm|im|sim, got '" + t + "'");
}

SnrReference parse_snr_reference(const std::string& t) {
  if (t == "receiver") return SnrReference::receiver;
  if (t == "transmit") return SnrReference::transmit;
  throw ConfigError("sweep.snr_reference: expected receiver|transmit, got '" + t + "'");
}

Estimator parse_estimator(const std::string& t) {
  if (t == "mf") return Estimator::matched_filter;
  if (t == "music") return Estimator::music;
  if (t == "fused") return Estimator::fused;
  throw ConfigError("sensing.estimator: expected mf|music|fused, got '" + t + "'");
}

RangeVelocityGrid GridSettings::grid() const {
  return {Axis::from_range(range_min, range_max, range_points),
          Axis::from_range(velocity_min, velocity_max, velocity_points)};
}

void ExperimentConfig::validate() const {
  waveform.validate();
  if (channel.paths < 1) throw ConfigError("channel.paths: must be >= 1");
  if (channel.taps < 1 || channel.taps > waveform.subcarriers)
    throw ConfigError("channel.taps: must be in [1, waveform.subcarriers]");
  if (!(channel.velocity_std >= 0.0)) throw ConfigError("channel.velocity_std: must be >= 0");
  if (!(channel.rice_factor >= 0.0)) throw ConfigError("channel.rice_factor: must be >= 0");
  if (snr_db.empty()) throw ConfigError("sweep.snr_db: at least one SNR point is required");
  for (double s : snr_db)
    if (!std::isfinite(s)) throw ConfigError("sweep.snr_db: values must be finite");
  for (double r : rho)
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("sweep.rho: values must lie in [0, 1)");
  if (waveforms.empty()) throw ConfigError("sweep.waveforms: at least one waveform is required");
  if (trials < 1) throw ConfigError("sweep.trials: must be >= 1");
  if (threads < 0) throw ConfigError("sweep.threads: must be >= 0");
  if (!(target_ber > 0.0 && target_ber < 0.5)) throw ConfigError("sweep.target_ber: must be in (0, 0.5)");
  const auto& g = sensing.grid;
  if (g.range_points < 2 || g.velocity_points < 2) throw ConfigError("sensing.*_points: need at least 2 per axis");
  if (!(g.range_max > g.range_min)) throw ConfigError("sensing.range_max: must exceed sensing.range_min");
  if (!(g.velocity_max > g.velocity_min)) throw ConfigError("sensing.velocity_max: must exceed sensing.velocity_min");
  if (sensing.targets.empty()) throw ConfigError("sensing.targets: at least one target is required");
  for (const auto& t : sensing.targets)
    if (!(t.range >= 0.0)) throw ConfigError("sensing.targets: ranges must be >= 0");
  if (sensing.calibration_trials < 2) throw ConfigError("sensing.calibration_trials: must be >= 2");
  if (!(sensing.gate_cells > 0.0)) throw ConfigError("sensing.gate_cells: must be > 0");
  if (sinr.draws < 1) throw ConfigError("sinr.draws: must be >= 1");
  if (!(sinr.doppler_error_hz >= 0.0)) throw ConfigError("sinr.doppler_error_hz: must be >= 0");
  if (output_dir.empty()) throw ConfigError("output.dir: must not be empty");
}

ExperimentConfig preset(Scale scale) {
  ExperimentConfig c;
  c.scale = scale;
  if (scale == Scale::desk) {
    c.waveform.subcarriers = 64;
    c.waveform.symbols = 16;
    c.trials = 200;
  } else {
    c.trials = 500;
    c.sensing.grid.range_points = 128;
    c.sensing.grid.velocity_points = 128;
  }
  return c;
}

namespace {

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

int parse_small(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < -1000000000LL || x > 1000000000LL) throw ConfigError(key + ": value out of range");
  return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected on|off, got '" + v + "'");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::string join_numbers(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += format_number(xs[i]);
  }
  return out;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(parse_double("list", parts[0]));
    } else if (parts.size() == 3) {
      const double a = parse_double("list", parts[0]);
      const double step = parse_double("list", parts[1]);
      const double b = parse_double("list", parts[2]);
      if (!(step > 0.0) || b < a) throw ConfigError("list: range '" + item + "' needs start:step:stop with step > 0");
      const auto n = static_cast<long long>(std::floor((b - a) / step + 1e-9));
      if (n > 100000) throw ConfigError("list: range '" + item + "' is too long");
      for (long long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    } else {
      throw ConfigError("list: cannot parse '" + item + "'");
    }
  }
  return out;
}

void set_option(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto& w = c.waveform;
  auto& ch = c.channel;
  auto& s = c.sensing;
  auto& g = c.sensing.grid;
  if (key == "waveform.subcarriers") w.subcarriers = parse_small(key, v);
  else if (key == "waveform.group_size") w.group_size = parse_small(key, v);
  else if (key == "waveform.active") w.active_per_group = parse_small(key, v);
  else if (key == "waveform.constellation_order") w.constellation_order = parse_small(key, v);
  else if (key == "waveform.subcarrier_spacing") w.subcarrier_spacing = parse_double(key, v);
  else if (key == "waveform.symbol_duration") w.symbol_duration = parse_double(key, v);
  else if (key == "waveform.cp_duration") w.cp_duration = parse_double(key, v);
  else if (key == "waveform.symbols") w.symbols = parse_small(key, v);
  else if (key == "waveform.carrier_frequency") w.carrier_frequency = parse_double(key, v);
  else if (key == "waveform.transmit_power") w.transmit_power = parse_double(key, v);
  else if (key == "waveform.shift_sense_per_symbol") w.shift_sense_per_symbol = parse_bool(key, v);
  else if (key == "channel.model") ch.model = parse_channel_model(v);
  else if (key == "channel.paths") ch.paths = parse_small(key, v);
  else if (key == "channel.taps") ch.taps = parse_small(key, v);
  else if (key == "channel.velocity_std") ch.velocity_std = parse_double(key, v);
  else if (key == "channel.rice_factor") ch.rice_factor = parse_double(key, v);
  else if (key == "channel.doppler") ch.doppler = parse_bool(key, v);
  else if (key == "channel.couple_targets") ch.couple_targets = parse_bool(key, v);
  else if (key == "sweep.snr_db") c.snr_db = parse_number_list(v);
  else if (key == "sweep.rho") c.rho = parse_number_list(v);
  else if (key == "sweep.waveforms") {
    c.waveforms.clear();
    for (const auto& item : split(v, ',')) c.waveforms.push_back(parse_waveform(item));
  } else if (key == "sweep.snr_reference") c.snr_reference = parse_snr_reference(v);
  else if (key == "sweep.trials") c.trials = parse_small(key, v);
  else if (key == "sweep.seed") c.seed = parse_u64(key, v);
  else if (key == "sweep.threads") c.threads = parse_small(key, v);
  else if (key == "sweep.target_ber") c.target_ber = parse_double(key, v);
  else if (key == "sweep.noise_dbm") c.noise_dbm = parse_double(key, v);
  else if (key == "sweep.scale") c.scale = parse_scale(v);
  else if (key == "sensing.range_min") g.range_min = parse_double(key, v);
  else if (key == "sensing.range_max") g.range_max = parse_double(key, v);
  else if (key == "sensing.range_points") g.range_points = parse_small(key, v);
  else if (key == "sensing.velocity_min") g.velocity_min = parse_double(key, v);
  else if (key == "sensing.velocity_max") g.velocity_max = parse_double(key, v);
  else if (key == "sensing.velocity_points") g.velocity_points = parse_small(key, v);
  else if (key == "sensing.estimator") s.estimator = parse_estimator(v);
  else if (key == "sensing.calibrated_prior") s.calibrated_prior = parse_bool(key, v);
  else if (key == "sensing.calibration_trials") s.calibration_trials = parse_small(key, v);
  else if (key == "sensing.gate_cells") s.gate_cells = parse_double(key, v);
  else if (key == "sensing.isolated") s.isolated = parse_bool(key, v);
  else if (key == "sensing.targets") {
    s.targets.clear();
    for (const auto& item : split(v, ',')) {
      const auto parts = split(item, ':');
      if (parts.size() != 2) throw ConfigError(key + ": expected range:velocity pairs, got '" + item + "'");
      s.targets.push_back({{1.0, 0.0}, parse_double(key, parts[0]), parse_double(key, parts[1])});
    }
  } else if (key == "sinr.gc_db") c.sinr.gc_db = parse_double(key, v);
  else if (key == "sinr.gc_source") c.sinr.gc_source = v;
  else if (key == "sinr.doppler_error_hz") c.sinr.doppler_error_hz = parse_double(key, v);
  else if (key == "sinr.draws") c.sinr.draws = parse_small(key, v);
  else if (key == "output.dir") c.output_dir = v;
  else if (key == "output.svg") c.svg = parse_bool(key, v);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

void load_config_file(ExperimentConfig& config, const std::string& path, bool honor_scale) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config file '" + path + "': " + e.message() + " at line " + std::to_string(e.line()));
  }
  // Scale first so that a preset can be selected from the file itself.
  auto sc = tree.get_optional<std::string>("sweep.scale");
  if (honor_scale && sc) {
    const auto s = parse_scale(trim(*sc));
    if (s != config.scale) {
      const auto keep_seed = config.seed;
      config = preset(s);
      config.seed = keep_seed;
    }
  }
  for (const auto& [section, body] : tree) {
    if (section == "run") continue;  // manifest header
    if (body.empty()) throw ConfigError("config file '" + path + "': key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      if (section == "sweep" && key == "scale") {
        parse_scale(trim(value.data()));
        continue;
      }
      set_option(config, section + "." + key, value.data());
    }
  }
}

std::string dump_config(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& w = c.waveform;
  const auto& g = c.sensing.grid;
  auto b = [](bool x) { return x ? "on" : "off"; };
  auto n = [](double x) { return format_number(x); };
  o << "[waveform]\n"
    << "subcarriers = " << w.subcarriers << "\n"
    << "group_size = " << w.group_size << "\n"
    << "active = " << w.active_per_group << "\n"
    << "constellation_order = " << w.constellation_order << "\n"
    << "subcarrier_spacing = " << n(w.subcarrier_spacing) << "\n"
    << "symbol_duration = " << n(w.symbol_duration) << "\n"
    << "cp_duration = " << n(w.cp_duration) << "\n"
    << "symbols = " << w.symbols << "\n"
    << "carrier_frequency = " << n(w.carrier_frequency) << "\n"
    << "transmit_power = " << n(w.transmit_power) << "\n"
    << "shift_sense_per_symbol = " << b(w.shift_sense_per_symbol) << "\n\n";
  o << "[channel]\n"
    << "model = " << to_string(c.channel.model) << "\n"
    << "paths = " << c.channel.paths << "\n"
    << "taps = " << c.channel.taps << "\n"
    << "velocity_std = " << n(c.channel.velocity_std) << "\n"
    << "rice_factor = " << n(c.channel.rice_factor) << "\n"
    << "doppler = " << b(c.channel.doppler) << "\n"
    << "couple_targets = " << b(c.channel.couple_targets) << "\n\n";
  std::string wf;
  for (std::size_t i = 0; i < c.waveforms.size(); ++i) wf += (i ? "," : "") + to_string(c.waveforms[i]);
  o << "[sweep]\n"
    << "scale = " << to_string(c.scale) << "\n"
    << "snr_db = " << join_numbers(c.snr_db) << "\n"
    << "rho = " << join_numbers(c.rho) << "\n"
    << "waveforms = " << wf << "\n"
    << "snr_reference = " << to_string(c.snr_reference) << "\n"
    << "trials = " << c.trials << "\n"
    << "seed = " << c.seed << "\n"
    << "threads = " << c.threads << "\n"
    << "target_ber = " << n(c.target_ber) << "\n"
    << "noise_dbm = " << n(c.noise_dbm) << "\n\n";
  std::string targets;
  for (std::size_t i = 0; i < c.sensing.targets.size(); ++i)
    targets += (i ? "," : "") + n(c.sensing.targets[i].range) + ":" + n(c.sensing.targets[i].velocity);
  o << "[sensing]\n"
    << "range_min = " << n(g.range_min) << "\n"
    << "range_max = " << n(g.range_max) << "\n"
    << "range_points = " << g.range_points << "\n"
    << "velocity_min = " << n(g.velocity_min) << "\n"
    << "velocity_max = " << n(g.velocity_max) << "\n"
    << "velocity_points = " << g.velocity_points << "\n"
    << "estimator = " << to_string(c.sensing.estimator) << "\n"
    << "calibrated_prior = " << b(c.sensing.calibrated_prior) << "\n"
    << "calibration_trials = " << c.sensing.calibration_trials << "\n"
    << "gate_cells = " << n(c.sensing.gate_cells) << "\n"
    << "isolated = " << b(c.sensing.isolated) << "\n"
    << "targets = " << targets << "\n\n";
  o << "[sinr]\n"
    << "gc_db = " << n(c.sinr.gc_db) << "\n"
    << "gc_source = " << c.sinr.gc_source << "\n"
    << "doppler_error_hz = " << n(c.sinr.doppler_error_hz) << "\n"
    << "draws = " << c.sinr.draws << "\n\n";
  o << "[output]\n"
    << "dir = " << c.output_dir << "\n"
    << "svg = " << b(c.svg) << "\n";
  return o.str();
}

}  // namespace simofdm
