#pragma once

#include "rotalign/ensemble.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rotalign {

enum class OutputFormat { Csv, CsvSvg };

std::string to_string(OutputFormat f);
OutputFormat parse_format(const std::string& text);

struct OutputSpec {
    OutputFormat format = OutputFormat::Csv;
    bool snapshots = false;          // binary wave-packet snapshot file from `simulate`
    double frame_stride_ps = 1.0;    // spacing of `frames` output
    int theta_points = 181;
};

struct TimeSpec {
    double t0_ps = 0.0;
    double t1_ps = 100.0;
};

struct ScanSpec {
    std::vector<double> intensities_W_cm2;
    std::vector<double> delays_ps;
};

struct RunConfig {
    std::string name = "run";
    SimulationSetup setup;
    std::optional<FocalGeometry> focal;
    TimeSpec time;
    ScanSpec scan;
    OutputSpec outputs;
    std::uint64_t seed = 20240229;
    std::filesystem::path pulse_file;    // for sampled envelopes

    /// Checks every field; throws ConfigError with the offending key.
    void validate() const;

    /// Effective configuration (defaults filled in) as canonical JSON.
    std::string echo() const;

    /// Probe delays: the scan grid if given, else the record grid over `time`.
    std::vector<double> delay_grid() const;
};

/// Parses and validates a JSON configuration. Relative file references are
/// resolved against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// "a:b:step" (inclusive within rounding) or a comma-separated list.
std::vector<double> parse_grid(const std::string& text);

} // namespace rotalign
