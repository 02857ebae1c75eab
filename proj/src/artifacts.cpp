#include "mnlb/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mnlb/rng.hpp"

namespace mnlb {

namespace {

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << body;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_csv_double(const std::filesystem::path& path, int lineno,
                        const std::string& field) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(field, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
    v = 0.0;
  }
  if (pos != field.size()) {
    throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                             ": bad numeric field '" + field + "'");
  }
  return v;
}

long parse_csv_long(const std::filesystem::path& path, int lineno,
                    const std::string& field) {
  std::size_t pos = 0;
  long v;
  try {
    v = std::stol(field, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
    v = 0;
  }
  if (pos != field.size()) {
    throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                             ": bad integer field '" + field + "'");
  }
  return v;
}

constexpr const char* kTraceHeader =
    "seed,round,arm_index,outcome,inst_regret,cum_regret,is_switch,logdet_h";
constexpr const char* kAggregateHeader =
    "round,regret_mean,regret_std,regret_lo,regret_hi,switches_mean,"
    "switches_std";

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::string canon = cfg.canonical();
  return hash_bytes(canon.data(), canon.size());
}

std::string trace_csv_string(const RegretTrace& trace,
                             std::uint64_t manifest_hash) {
  std::ostringstream out;
  out << "# manifest_hash=" << hash_hex(manifest_hash) << "\n";
  out << kTraceHeader << "\n";
  for (const TraceRow& row : trace.rows) {
    out << trace.seed << ',' << row.round << ',' << row.arm_index << ','
        << row.outcome << ',' << format_double(row.inst_regret) << ','
        << format_double(row.cum_regret) << ',' << (row.is_switch ? 1 : 0)
        << ',' << format_double(row.logdet_h) << "\n";
  }
  return out.str();
}

void write_trace_csv(const std::filesystem::path& path,
                     const RegretTrace& trace, std::uint64_t manifest_hash) {
  write_file(path, trace_csv_string(trace, manifest_hash));
}

RegretTrace read_trace_csv(const std::filesystem::path& path,
                           std::uint64_t* manifest_hash) {
  std::stringstream in(read_file(path));
  std::string line;
  int lineno = 0;
  RegretTrace trace;
  bool saw_header = false;
  bool saw_seed = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string tag = "# manifest_hash=";
      if (manifest_hash != nullptr && line.rfind(tag, 0) == 0) {
        *manifest_hash =
            std::stoull(line.substr(tag.size()), nullptr, 16);
      }
      continue;
    }
    if (!saw_header) {
      if (line != kTraceHeader) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": unexpected trace header '" + line + "'");
      }
      saw_header = true;
      continue;
    }
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 8) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected 8 fields, got " +
                               std::to_string(f.size()));
    }
    std::uint64_t seed = 0;
    try {
      std::size_t pos = 0;
      seed = std::stoull(f[0], &pos);
      if (pos != f[0].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": bad seed field '" + f[0] + "'");
    }
    if (!saw_seed) {
      trace.seed = seed;
      saw_seed = true;
    } else if (seed != trace.seed) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": seed column is not constant");
    }
    TraceRow row;
    row.round = parse_csv_long(path, lineno, f[1]);
    row.arm_index = static_cast<int>(parse_csv_long(path, lineno, f[2]));
    row.outcome = static_cast<int>(parse_csv_long(path, lineno, f[3]));
    row.inst_regret = parse_csv_double(path, lineno, f[4]);
    row.cum_regret = parse_csv_double(path, lineno, f[5]);
    long sw = parse_csv_long(path, lineno, f[6]);
    if (sw != 0 && sw != 1) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": is_switch must be 0 or 1");
    }
    row.is_switch = sw == 1;
    row.logdet_h = parse_csv_double(path, lineno, f[7]);
    if (row.is_switch) {
      trace.update_rounds.push_back(row.round);
      ++trace.switch_count;
    }
    trace.rows.push_back(row);
  }
  if (!saw_header) {
    throw std::runtime_error(path.string() + ": missing trace header");
  }
  if (!trace.rows.empty()) trace.total_regret = trace.rows.back().cum_regret;
  return trace;
}

void write_aggregate_csv(const std::filesystem::path& path,
                         const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << kAggregateHeader << "\n";
  for (const AggregateRow& r : rows) {
    out << r.round << ',' << format_double(r.regret_mean) << ','
        << format_double(r.regret_std) << ',' << format_double(r.regret_lo)
        << ',' << format_double(r.regret_hi) << ','
        << format_double(r.switches_mean) << ','
        << format_double(r.switches_std) << "\n";
  }
  write_file(path, out.str());
}

std::vector<AggregateRow> read_aggregate_csv(
    const std::filesystem::path& path) {
  std::stringstream in(read_file(path));
  std::string line;
  int lineno = 0;
  bool saw_header = false;
  std::vector<AggregateRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!saw_header) {
      if (line != kAggregateHeader) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": unexpected aggregate header");
      }
      saw_header = true;
      continue;
    }
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 7) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected 7 fields, got " +
                               std::to_string(f.size()));
    }
    AggregateRow r;
    r.round = parse_csv_long(path, lineno, f[0]);
    r.regret_mean = parse_csv_double(path, lineno, f[1]);
    r.regret_std = parse_csv_double(path, lineno, f[2]);
    r.regret_lo = parse_csv_double(path, lineno, f[3]);
    r.regret_hi = parse_csv_double(path, lineno, f[4]);
    r.switches_mean = parse_csv_double(path, lineno, f[5]);
    r.switches_std = parse_csv_double(path, lineno, f[6]);
    rows.push_back(r);
  }
  if (!saw_header) {
    throw std::runtime_error(path.string() + ": missing aggregate header");
  }
  return rows;
}

std::string manifest_string(const ExperimentConfig& cfg,
                            const DerivedValues& derived,
                            const std::vector<ArtifactStatus>& artifacts,
                            bool partial) {
  std::ostringstream out;
  out << "# mnlb run manifest (parseable as a config; '#' lines are "
         "annotations)\n";
  out << "# manifest_hash = " << hash_hex(config_hash(cfg)) << "\n\n";
  out << cfg.canonical();
  out << "\n# resolved hyperparameters\n";
  out << "# lambda = " << format_double(derived.lambda) << "\n";
  out << "# gamma = " << format_double(derived.gamma) << "\n";
  out << "# kappa = " << format_double(derived.kappa) << "\n";
  if (!derived.batch_boundaries.empty()) {
    out << "# batch_boundaries =";
    for (long b : derived.batch_boundaries) out << ' ' << b;
    out << "\n";
  }
  out << "# status = " << (partial ? "partial" : "ok") << "\n";
  out << "# artifacts\n";
  for (const ArtifactStatus& a : artifacts) {
    out << "#   " << a.file << " : " << a.note << "\n";
  }
  return out.str();
}

void write_manifest(const std::filesystem::path& path,
                    const ExperimentConfig& cfg, const DerivedValues& derived,
                    const std::vector<ArtifactStatus>& artifacts,
                    bool partial) {
  write_file(path, manifest_string(cfg, derived, artifacts, partial));
}

namespace {

// chart geometry
constexpr double kWidth = 920.0;
constexpr double kHeight = 560.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 30.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 60.0;
constexpr int kMaxRenderPoints = 400;

const char* kPalette[] = {"#1f6fb4", "#d1495b", "#3a9d5d",
                          "#8450a8", "#c57c1e", "#4aa5a2"};
constexpr int kPaletteSize = 6;

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

// round the raw step up to a 1/2/5 times power of ten
double nice_step(double span, int target_ticks) {
  if (!(span > 0.0)) return 1.0;
  double raw = span / std::max(1, target_ticks);
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double frac = raw / mag;
  double step = frac <= 1.0 ? 1.0 : frac <= 2.0 ? 2.0 : frac <= 5.0 ? 5.0
                                                                    : 10.0;
  return step * mag;
}

std::vector<double> ticks_for(double lo, double hi, int target) {
  double step = nice_step(hi - lo, target);
  std::vector<double> ticks;
  double first = std::ceil(lo / step - 1e-9) * step;
  for (double t = first; t <= hi + step * 1e-9; t += step) {
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return ticks;
}

std::vector<std::size_t> decimate_indices(std::size_t n) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  std::size_t stride = (n + kMaxRenderPoints - 1) / kMaxRenderPoints;
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

}  // namespace

std::string line_chart_svg(const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<ChartSeries>& series) {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  bool any = false;
  for (const ChartSeries& s : series) {
    if (s.x.size() != s.y.size()) {
      throw std::invalid_argument("chart series x/y length mismatch");
    }
    bool banded = !s.lo.empty() || !s.hi.empty();
    if (banded && (s.lo.size() != s.x.size() || s.hi.size() != s.x.size())) {
      throw std::invalid_argument("chart series band length mismatch");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      double ylo = banded ? s.lo[i] : s.y[i];
      double yhi = banded ? s.hi[i] : s.y[i];
      if (!any) {
        x_min = x_max = s.x[i];
        y_min = ylo;
        y_max = yhi;
        any = true;
      } else {
        x_min = std::min(x_min, s.x[i]);
        x_max = std::max(x_max, s.x[i]);
        y_min = std::min(y_min, ylo);
        y_max = std::max(y_max, yhi);
      }
    }
  }
  if (!any) {
    x_min = y_min = 0.0;
    x_max = y_max = 1.0;
  }
  if (x_max - x_min < 1e-12) x_max = x_min + 1.0;
  if (y_max - y_min < 1e-12) y_max = y_min + 1.0;
  double y_pad = 0.04 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  double plot_w = kWidth - kLeft - kRight;
  double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) {
    return kLeft + (x - x_min) / (x_max - x_min) * plot_w;
  };
  auto py = [&](double y) {
    return kTop + (y_max - y) / (y_max - y_min) * plot_h;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"28\" font-family=\"sans-serif\""
      << " font-size=\"17\" text-anchor=\"middle\">" << escape_xml(title)
      << "</text>\n";

  // gridlines and ticks
  svg << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
  for (double t : ticks_for(x_min, x_max, 7)) {
    double x = px(t);
    svg << "<line x1=\"" << fmt2(x) << "\" y1=\"" << fmt2(kTop) << "\" x2=\""
        << fmt2(x) << "\" y2=\"" << fmt2(kTop + plot_h)
        << "\" stroke=\"#e3e3e3\"/>\n";
    svg << "<text x=\"" << fmt2(x) << "\" y=\"" << fmt2(kTop + plot_h + 18)
        << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
  }
  for (double t : ticks_for(y_min, y_max, 6)) {
    double y = py(t);
    svg << "<line x1=\"" << fmt2(kLeft) << "\" y1=\"" << fmt2(y) << "\" x2=\""
        << fmt2(kLeft + plot_w) << "\" y2=\"" << fmt2(y)
        << "\" stroke=\"#e3e3e3\"/>\n";
    svg << "<text x=\"" << fmt2(kLeft - 8) << "\" y=\"" << fmt2(y + 4)
        << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
  }
  svg << "</g>\n";

  // axes
  svg << "<line x1=\"" << fmt2(kLeft) << "\" y1=\"" << fmt2(kTop + plot_h)
      << "\" x2=\"" << fmt2(kLeft + plot_w) << "\" y2=\""
      << fmt2(kTop + plot_h) << "\" stroke=\"#444\"/>\n";
  svg << "<line x1=\"" << fmt2(kLeft) << "\" y1=\"" << fmt2(kTop) << "\" x2=\""
      << fmt2(kLeft) << "\" y2=\"" << fmt2(kTop + plot_h)
      << "\" stroke=\"#444\"/>\n";
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 14
      << "\" font-family=\"sans-serif\" font-size=\"14\""
      << " text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";
  svg << "<text x=\"20\" y=\"" << kTop + plot_h / 2
      << "\" font-family=\"sans-serif\" font-size=\"14\""
      << " text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << kTop + plot_h / 2 << ")\">" << escape_xml(y_label) << "</text>\n";

  // bands then lines so every line stays visible
  for (std::size_t si = 0; si < series.size(); ++si) {
    const ChartSeries& s = series[si];
    if (s.lo.empty() || s.x.empty()) continue;
    const char* color = kPalette[si % kPaletteSize];
    std::vector<std::size_t> idx = decimate_indices(s.x.size());
    svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\""
        << " stroke=\"none\" points=\"";
    for (std::size_t i : idx) {
      svg << fmt2(px(s.x[i])) << ',' << fmt2(py(s.hi[i])) << ' ';
    }
    for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
      svg << fmt2(px(s.x[*it])) << ',' << fmt2(py(s.lo[*it])) << ' ';
    }
    svg << "\"/>\n";
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const ChartSeries& s = series[si];
    if (s.x.empty()) continue;
    const char* color = kPalette[si % kPaletteSize];
    std::vector<std::size_t> idx = decimate_indices(s.x.size());
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i : idx) {
      svg << fmt2(px(s.x[i])) << ',' << fmt2(py(s.y[i])) << ' ';
    }
    svg << "\"/>\n";
  }

  // legend
  double ly = kTop + 10;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % kPaletteSize];
    svg << "<line x1=\"" << fmt2(kLeft + 12) << "\" y1=\"" << fmt2(ly)
        << "\" x2=\"" << fmt2(kLeft + 40) << "\" y2=\"" << fmt2(ly)
        << "\" stroke=\"" << color << "\" stroke-width=\"2.5\"/>\n";
    svg << "<text x=\"" << fmt2(kLeft + 46) << "\" y=\"" << fmt2(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"13\">"
        << escape_xml(series[si].label) << "</text>\n";
    ly += 18;
  }

  svg << "</svg>\n";
  return svg.str();
}

void write_line_chart_svg(const std::filesystem::path& path,
                          const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<ChartSeries>& series) {
  write_file(path, line_chart_svg(title, x_label, y_label, series));
}

}  // namespace mnlb
