#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mnlb/config.hpp"

namespace mnlb {

/// Shortest representation that round-trips a double exactly.
std::string format_double(double v);

/// FNV hash of the canonical config echo; stamped on every trace CSV so
/// artifacts can be matched back to the manifest that produced them.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// -- trace CSVs ---------------------------------------------------------

/// Header: a `# manifest_hash=<hex>` comment line, then the column row
/// seed,round,arm_index,outcome,inst_regret,cum_regret,is_switch,logdet_h.
std::string trace_csv_string(const RegretTrace& trace,
                             std::uint64_t manifest_hash);
void write_trace_csv(const std::filesystem::path& path,
                     const RegretTrace& trace, std::uint64_t manifest_hash);

/// Rebuilds rows plus the summary fields derivable from them (seed, totals,
/// switch rounds). Hyperparameter provenance is not stored in the CSV and is
/// left zeroed. Throws std::runtime_error on malformed input.
RegretTrace read_trace_csv(const std::filesystem::path& path,
                           std::uint64_t* manifest_hash = nullptr);

// -- aggregate CSVs -----------------------------------------------------

void write_aggregate_csv(const std::filesystem::path& path,
                         const std::vector<AggregateRow>& rows);
std::vector<AggregateRow> read_aggregate_csv(
    const std::filesystem::path& path);

// -- run manifest -------------------------------------------------------

struct ArtifactStatus {
  std::string file;
  std::string note;  // "ok" or a failure description
};

/// Hyperparameters as resolved for a run, echoed into the manifest.
struct DerivedValues {
  double lambda = 0.0;
  double gamma = 0.0;
  double kappa = 0.0;
  std::vector<long> batch_boundaries;  // batched schedule, empty otherwise
};

/// The manifest body is the canonical config echo (itself a parseable
/// config), followed by comment lines carrying the hash, resolved
/// hyperparameters, the artifact list, and an ok/partial status flag.
std::string manifest_string(const ExperimentConfig& cfg,
                            const DerivedValues& derived,
                            const std::vector<ArtifactStatus>& artifacts,
                            bool partial);
void write_manifest(const std::filesystem::path& path,
                    const ExperimentConfig& cfg, const DerivedValues& derived,
                    const std::vector<ArtifactStatus>& artifacts, bool partial);

// -- charts -------------------------------------------------------------

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> lo;  // optional band; empty = no band
  std::vector<double> hi;
};

/// Minimal SVG line chart: axes with tick labels, one polyline per series,
/// shaded lo/hi bands, legend. Long series are decimated deterministically
/// for rendering; the companion CSV keeps full resolution.
std::string line_chart_svg(const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<ChartSeries>& series);
void write_line_chart_svg(const std::filesystem::path& path,
                          const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<ChartSeries>& series);

}  // namespace mnlb
