#include "simofdm/output.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "format.hpp"
#include "simofdm/error.hpp"

namespace simofdm {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string safe_name(std::string s) {
  for (auto& ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
  return s;
}

struct Curve {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

std::string svg_chart(const std::string& title, const std::vector<Curve>& curves, bool log_y) {
  constexpr double W = 640, H = 420, L = 70, R = 170, T = 40, B = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  for (const auto& c : curves)
    for (auto [x, y] : c.points) {
      if (log_y && !(y > 0.0)) continue;
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, ty(y)), y1 = std::max(y1, ty(y));
    }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  if (log_y) y0 = std::floor(y0), y1 = std::ceil(y1);
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << L << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << format_number(std::round(xv * 100) / 100)
      << "</text>\n";
    const double yv = y0 + (y1 - y0) * i / 4.0;
    const double ypix = H - B - (yv - y0) / (y1 - y0) * (H - T - B);
    const std::string lab = log_y ? "1e" + format_number(std::round(yv * 100) / 100) : format_number(std::round(yv * 1000) / 1000);
    o << "<text x=\"" << L - 6 << "\" y=\"" << ypix + 4 << "\" text-anchor=\"end\">" << lab << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">SNR (dB)</text>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const char* col = colors[k % 8];
    std::string d;
    for (auto [x, y] : curves[k].points) {
      if (log_y && !(y > 0.0)) continue;
      d += (d.empty() ? "M" : " L") + format_number(px(x)) + " " + format_number(py(y));
    }
    if (!d.empty()) o << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\"/>\n";
    const double ly = T + 16 + 16.0 * static_cast<double>(k);
    o << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << W - R + 36 << "\" y=\"" << ly << "\">" << curves[k].label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace

std::string format_csv(std::vector<ResultRow> rows) {
  std::sort(rows.begin(), rows.end(), row_less);
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += csv_field(r.experiment) + "," + csv_field(r.waveform) + "," + format_number(r.rho) + "," +
           format_number(r.snr_db) + "," + csv_field(r.metric) + "," + format_number(r.value) + "," +
           std::to_string(r.trials) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

std::vector<ResultRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw InputError("results CSV: unexpected header");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw InputError("results CSV: line " + std::to_string(lineno) + " has " +
                                        std::to_string(f.size()) + " fields");
    try {
      rows.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3]), f[4], std::stod(f[5]),
                      static_cast<std::size_t>(std::stoull(f[6])), std::stoull(f[7])});
    } catch (const std::exception&) {
      throw InputError("results CSV: line " + std::to_string(lineno) + " has a malformed number");
    }
  }
  return rows;
}

std::vector<ResultRow> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return parse_csv(s.str());
}

EmittedFiles emit_results(const std::vector<ResultRow>& rows, const std::string& dir, const std::string& name,
                          const ExperimentConfig& config, const std::string& command_line) {
  if (rows.empty()) throw InputError("emit_results: no rows to write");
  for (const auto& r : rows)
    if (!std::isfinite(r.value) || r.value < 0.0)
      throw NumericalError("emit_results: row " + r.experiment + "/" + r.metric + " has an invalid value");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());

  EmittedFiles files;
  const fs::path base = fs::path(dir) / safe_name(name);
  files.csv = base.string() + ".csv";
  write_file(files.csv, format_csv(rows));

  // Curves keyed by (experiment, metric), one series per (waveform, rho), x = SNR.
  std::vector<ResultRow> sorted = rows;
  std::sort(sorted.begin(), sorted.end(), row_less);
  std::map<std::pair<std::string, std::string>, std::map<std::pair<std::string, double>, Curve>> groups;
  for (const auto& r : sorted) {
    auto& c = groups[{r.experiment, r.metric}][{r.waveform, r.rho}];
    c.label = r.waveform + (r.waveform == "s-im-ofdm" ? " rho=" + format_number(r.rho) : "");
    c.points.emplace_back(r.snr_db, r.value);
  }
  std::string series = "experiment,metric,series,snr_db,value\n";
  for (const auto& [key, curves] : groups)
    for (const auto& [ck, curve] : curves)
      for (auto [x, y] : curve.points)
        series += csv_field(key.first) + "," + csv_field(key.second) + "," + csv_field(curve.label) + "," +
                  format_number(x) + "," + format_number(y) + "\n";
  files.series = base.string() + ".series.csv";
  write_file(files.series, series);

  if (config.svg) {
    std::size_t charts = 0;
    for (const auto& [key, curves] : groups) {
      std::vector<Curve> list;
      bool multi = false;
      for (const auto& [ck, curve] : curves) {
        list.push_back(curve);
        multi = multi || curve.points.size() > 1;
      }
      if (!multi || charts >= 24) continue;
      const auto& metric = key.second;
      const bool log_y = metric.rfind("BER", 0) == 0 || metric.rfind("RMSE", 0) == 0 || metric.rfind("CRLB", 0) == 0;
      const std::string path = base.string() + "." + safe_name(key.first + "." + metric) + ".svg";
      write_file(path, svg_chart(key.first + " " + metric, list, log_y));
      files.charts.push_back(path);
      ++charts;
    }
  }

  files.manifest = base.string() + ".manifest.ini";
  std::string manifest = "; simofdm run manifest\n[run]\ncommand = " + command_line + "\nrows = " +
                         std::to_string(rows.size()) + "\n\n" + dump_config(config);
  write_file(files.manifest, manifest);
  return files;
}

}  // namespace simofdm
