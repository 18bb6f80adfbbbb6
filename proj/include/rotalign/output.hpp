#pragma once

#include "rotalign/ensemble.hpp"
#include "rotalign/hamiltonian.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace rotalign {

std::string engine_version();

/// Shortest round-trippable-enough fixed formatting used by every writer.
std::string format_number(double v);

/// Self-describing header: key/value lines followed by the config echo,
/// every line prefixed with "# ".
struct OutputHeader {
    std::vector<std::pair<std::string, std::string>> fields;
    std::string config_echo;

    void add(const std::string& key, const std::string& value) { fields.emplace_back(key, value); }
    void add(const std::string& key, double value) { fields.emplace_back(key, format_number(value)); }
    std::string render() const;
};

void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Columns: t_ps, cos2_3d, cos2_2d, then w_J~ for each tracked pendular state.
void write_trajectory_csv(const std::filesystem::path& path, const OutputHeader& header, const AlignmentTrace& trace);

/// Long format: intensity_W_cm2, delay_ps, cos2_2d; failed rows are listed in the header.
void write_scan_csv(const std::filesystem::path& path, const OutputHeader& header, const ScanResult& scan);

/// Columns: delta_omega, label, energy, bound, cos2, converged.
void write_spectrum_csv(const std::filesystem::path& path, const OutputHeader& header,
                        const std::vector<PendularSpectrum>& spectra, int n_states);

/// Long format: t_ps, theta_rad, rho.
void write_frames_csv(const std::filesystem::path& path, const OutputHeader& header, const std::vector<double>& times_ps,
                      const std::vector<double>& theta, const std::vector<std::vector<double>>& rho);

/// "key: value" lines.
void write_report(const std::filesystem::path& path, const OutputHeader& header,
                  const std::vector<std::pair<std::string, std::string>>& entries);

/// Numeric table from a CSV written by this package: '#' lines are skipped,
/// the first remaining line names the columns.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::vector<double> column(const std::string& name) const;
    bool has(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

void write_line_plot_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<PlotSeries>& series);

/// z[row][col] with rows along y and columns along x.
void write_heatmap_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<double>& x, const std::vector<double>& y,
                       const std::vector<std::vector<double>>& z);

void write_polar_svg(const std::filesystem::path& path, const std::string& title, const std::vector<double>& theta,
                     const std::vector<double>& rho);

} // namespace rotalign
