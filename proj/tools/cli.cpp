#include "cli.hpp"

#include "rotalign/analysis.hpp"
#include "rotalign/config.hpp"
#include "rotalign/ensemble.hpp"
#include "rotalign/errors.hpp"
#include "rotalign/output.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace rotalign::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    std::string format;
    std::string delays;
    std::string intensities;
};

struct Context {
    RunConfig cfg;
    fs::path out;
    int threads = 1;
    bool svg = false;
};

Context make_context(const CommonOptions& opt, std::optional<RunConfig> preloaded = std::nullopt)
{
    Context ctx;
    if (preloaded) {
        ctx.cfg = *preloaded;
    } else {
        if (opt.config_path.empty()) throw ConfigError("--config is required");
        ctx.cfg = load_config(opt.config_path);
    }
    if (!opt.format.empty()) ctx.cfg.outputs.format = parse_format(opt.format);
    if (!opt.delays.empty()) ctx.cfg.scan.delays_ps = parse_grid(opt.delays);
    if (!opt.intensities.empty()) ctx.cfg.scan.intensities_W_cm2 = parse_grid(opt.intensities);
    ctx.cfg.validate();
    ctx.out = opt.out_dir;
    ctx.threads = opt.threads > 0 ? opt.threads : default_thread_count();
    ctx.svg = ctx.cfg.outputs.format == OutputFormat::CsvSvg;
    return ctx;
}

OutputHeader base_header(const Context& ctx, const std::string& command)
{
    OutputHeader h;
    const auto& mol = ctx.cfg.setup.molecule;
    const auto units = ReducedUnits::for_molecule(mol);
    h.add("command", command);
    h.add("molecule", mol.name + " (B = " + format_number(mol.rotational_constant_cm) +
                          " cm^-1, delta_alpha = " + format_number(mol.polarizability_anisotropy_A3) +
                          " A^3; " + mol.source + ")");
    h.add("time_unit_ps", units.time_ps());
    h.add("revival_period_ps", units.revival_period_ps());
    h.add("pulse", ctx.cfg.setup.pulse.describe());
    h.add("peak_delta_omega", reduced_coupling(mol, ctx.cfg.setup.pulse.peak_intensity()));
    h.add("detection_model", ctx.cfg.setup.detection.describe());
    if (ctx.cfg.focal) {
        std::ostringstream f;
        f << "focal average, kappa = " << format_number(ctx.cfg.focal->kappa()) << ", bins = " << ctx.cfg.focal->n_bins;
        h.add("volume_average", f.str());
    } else {
        h.add("volume_average", "none (single peak intensity)");
    }
    h.config_echo = ctx.cfg.echo();
    return h;
}

std::string intensity_tag(double intensity)
{
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << intensity;
    auto s = os.str();
    for (auto& c : s)
        if (c == '+') c = 'p';
    return s;
}

void plot_trace(const fs::path& path, const std::string& title, const AlignmentTrace& tr)
{
    write_line_plot_svg(path, title, "delay (ps)", "alignment",
                        {{"<cos^2 theta_2D>", tr.times_ps, tr.cos2_2d}, {"<cos^2 theta>", tr.times_ps, tr.cos2_3d}});
}

void plot_weights(const fs::path& path, const std::string& title, const AlignmentTrace& tr)
{
    std::vector<PlotSeries> series;
    for (Eigen::Index k = 0; k < tr.pendular_weights.cols(); ++k) {
        PlotSeries s;
        s.label = "|" + std::to_string(tr.tracked_labels[static_cast<std::size_t>(k)]) + "~,0>";
        s.x = tr.times_ps;
        for (Eigen::Index i = 0; i < tr.pendular_weights.rows(); ++i) s.y.push_back(tr.pendular_weights(i, k));
        series.push_back(std::move(s));
    }
    write_line_plot_svg(path, title, "time (ps)", "weight", series);
}

AlignmentTrace simulate_one(const Context& ctx, double intensity, const std::vector<double>& delays)
{
    SimulationSetup s = ctx.cfg.setup;
    s.pulse = s.pulse.with_peak(intensity);
    return run_delay_scan(s, ctx.cfg.focal, delays, ctx.threads);
}

// ---------------------------------------------------------------- simulate

void do_simulate(const Context& ctx)
{
    const auto delays = ctx.cfg.delay_grid();
    const auto& setup = ctx.cfg.setup;
    const auto trace = run_delay_scan(setup, ctx.cfg.focal, delays, ctx.threads);
    auto header = base_header(ctx, "simulate");
    write_trajectory_csv(ctx.out / "trajectory.csv", header, trace);
    if (ctx.svg) {
        plot_trace(ctx.out / "trajectory.svg", "alignment trace", trace);
        if (trace.pendular_weights.cols() > 0) plot_weights(ctx.out / "weights.svg", "pendular weights", trace);
    }
    if (ctx.cfg.outputs.snapshots) {
        const auto initial = WavePacket::basis_state(setup.basis, setup.initial_j);
        const auto rec = propagate_to_times(initial, setup.molecule, setup.pulse, setup.start_time(delays.front()),
                                            delays, setup.propagation);
        write_snapshots(ctx.out / "snapshots.bin", rec);
    }
}

// ---------------------------------------------------------------- scan

MapStructure map_structure(const Context& ctx, const ScanResult& res)
{
    const auto& setup = ctx.cfg.setup;
    const auto units = ReducedUnits::for_molecule(setup.molecule);
    const auto plateau = setup.pulse.above(0.95);
    const auto support = setup.pulse.support(setup.propagation.handoff_threshold);
    return analyze_map(res, {plateau.begin_ps, plateau.end_ps}, support.end_ps, units.revival_period_ps());
}

void write_map_report(const Context& ctx, const ScanResult& res, const MapStructure& m)
{
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("plateau_window_ps", format_number(m.plateau.t_start_ps) + " " + format_number(m.plateau.t_end_ps));
    e.emplace_back("pulse_end_ps", format_number(m.pulse_end_ps));
    e.emplace_back("revival_period_ps", format_number(m.revival_period_ps));
    e.emplace_back("oscillation_count_non_decreasing", m.counts_non_decreasing ? "true" : "false");
    std::string rows;
    for (auto r : m.suppression_rows) rows += (rows.empty() ? "" : " ") + format_number(res.intensities[r]);
    e.emplace_back("suppression_stripes_W_cm2", rows.empty() ? "none" : rows);
    for (std::size_t r = 0; r < res.intensities.size(); ++r)
        e.emplace_back("row " + format_number(res.intensities[r]),
                       res.row_ok[r] ? "frequency_per_ps=" + format_number(m.plateau_frequency[r]) +
                                           " count=" + format_number(m.oscillation_count[r]) +
                                           " post_contrast=" + format_number(m.post_contrast[r])
                                     : "failed: " + res.row_error[r]);
    write_report(ctx.out / "map_report.txt", base_header(ctx, "scan"), e);
}

bool do_scan(const Context& ctx)
{
    auto intensities = ctx.cfg.scan.intensities_W_cm2;
    if (intensities.empty()) intensities = {ctx.cfg.setup.pulse.peak_intensity()};
    const auto delays = ctx.cfg.delay_grid();
    const auto res = run_intensity_scan(ctx.cfg.setup, ctx.cfg.focal, intensities, delays, ctx.threads);
    write_scan_csv(ctx.out / "scan.csv", base_header(ctx, "scan"), res);
    if (ctx.svg)
        write_heatmap_svg(ctx.out / "scan.svg", "<cos^2 theta_2D>", "delay (ps)", "peak intensity (W/cm^2)",
                          res.delays_ps, res.intensities, res.cos2_2d);
    if (intensities.size() >= 3) write_map_report(ctx, res, map_structure(ctx, res));
    bool all_ok = true;
    for (std::size_t r = 0; r < res.row_ok.size(); ++r)
        if (!res.row_ok[r]) {
            std::cerr << "warning: scan row " << format_number(res.intensities[r]) << " failed: " << res.row_error[r]
                      << '\n';
            all_ok = false;
        }
    return all_ok;
}

// ---------------------------------------------------------------- spectrum

void do_spectrum(const Context& ctx, const std::vector<double>& dws, int states)
{
    std::vector<PendularSpectrum> spectra;
    for (double dw : dws) {
        if (!(dw >= 0.0)) throw ConfigError("--dw values must be nonnegative");
        spectra.push_back(eigensolve_converged(ctx.cfg.setup.basis, dw, states));
    }
    for (const auto& s : spectra)
        if (!s.all_converged(std::min(states, s.size())))
            std::cerr << "warning: unconverged pendular states at delta_omega = " << format_number(s.delta_omega) << '\n';
    auto header = base_header(ctx, "spectrum");
    write_spectrum_csv(ctx.out / "spectrum.csv", header, spectra, states);
    if (ctx.svg) {
        std::vector<PlotSeries> series(static_cast<std::size_t>(states));
        for (int k = 0; k < states; ++k) series[static_cast<std::size_t>(k)].label = "";
        for (const auto& s : spectra)
            for (int k = 0; k < std::min(states, s.size()); ++k) {
                series[static_cast<std::size_t>(k)].x.push_back(s.delta_omega);
                series[static_cast<std::size_t>(k)].y.push_back(s.energies[k]);
            }
        write_line_plot_svg(ctx.out / "spectrum.svg", "pendular energies", "delta_omega", "energy / B", series);
    }
}

// ---------------------------------------------------------------- frames

void do_frames(const Context& ctx)
{
    const auto& setup = ctx.cfg.setup;
    const auto times = record_grid(ctx.cfg.time.t0_ps, ctx.cfg.time.t1_ps, ctx.cfg.outputs.frame_stride_ps);
    const auto initial = WavePacket::basis_state(setup.basis, setup.initial_j);
    const auto rec = propagate_to_times(initial, setup.molecule, setup.pulse, setup.start_time(times.front()), times,
                                        setup.propagation);
    const int n = ctx.cfg.outputs.theta_points;
    std::vector<double> theta(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) theta[static_cast<std::size_t>(k)] = M_PI * k / (n - 1);
    std::vector<std::vector<double>> rho;
    for (const auto& p : rec.packets) rho.push_back(angular_density(p, theta));
    write_frames_csv(ctx.out / "frames.csv", base_header(ctx, "frames"), rec.times_ps, theta, rho);
    if (ctx.svg)
        for (std::size_t i = 0; i < rho.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "frame_%04zu.svg", i);
            write_polar_svg(ctx.out / "frames" / name, "t = " + format_number(rec.times_ps[i]) + " ps", theta, rho[i]);
        }
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
    std::string input;
    std::string column = "cos2_2d";
    std::string window;
    double pulse_end_ps = std::nan("");
    double revival_period_ps = std::nan("");
    int components = 1;
    bool spectrum = false;
};

void do_analyze(const AnalyzeOptions& a, const CommonOptions& common)
{
    if (a.input.empty()) throw ConfigError("analyze: --input is required");
    const auto table = read_csv(a.input);
    if (!table.has("t_ps")) throw ConfigError("analyze: input has no t_ps column");
    const auto t = table.column("t_ps");
    const auto y = table.column(a.column);
    if (t.size() < 2) throw ConfigError("analyze: input has fewer than two samples");

    Context ctx;
    ctx.out = common.out_dir;
    if (!common.config_path.empty()) ctx.cfg = load_config(common.config_path);

    AnalysisWindow w{t.front(), t.back()};
    if (!a.window.empty()) {
        const auto bounds = parse_grid(a.window.find(':') != std::string::npos
                                           ? a.window.substr(0, a.window.find(':')) + "," +
                                                 a.window.substr(a.window.find(':') + 1)
                                           : a.window);
        if (bounds.size() != 2 || !(bounds[1] > bounds[0])) throw ConfigError("analyze: --window must be a:b with b > a");
        w = {bounds[0], bounds[1]};
    }
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("input", a.input);
    e.emplace_back("column", a.column);
    e.emplace_back("window_ps", format_number(w.t_start_ps) + " " + format_number(w.t_end_ps));
    const auto comps = spectral_components(t, y, w, std::max(1, a.components));
    for (std::size_t k = 0; k < comps.size(); ++k) {
        const std::string p = comps.size() == 1 ? "" : "component_" + std::to_string(k + 1) + "_";
        e.emplace_back(p + "frequency_per_ps", format_number(comps[k].dominant_frequency));
        e.emplace_back(p + "amplitude", format_number(comps[k].amplitude));
        e.emplace_back(p + "phase_rad", format_number(comps[k].phase));
        if (k == 0) e.emplace_back("mean_level", format_number(comps[k].mean_level));
        if (comps[k].tie_broken) {
            e.emplace_back(p + "tie_broken", "true");
            std::cerr << "warning: equal spectral peaks; the lowest frequency was reported\n";
        }
    }
    if (std::isfinite(a.pulse_end_ps)) {
        double period = a.revival_period_ps;
        if (!std::isfinite(period)) period = ReducedUnits::for_molecule(ctx.cfg.setup.molecule).revival_period_ps();
        const auto rev = revival_contrast(t, y, a.pulse_end_ps, period);
        e.emplace_back("revival_contrast", format_number(rev.contrast));
        e.emplace_back("post_pulse_mean", format_number(rev.mean_level));
        e.emplace_back("revival_period_estimate_ps", format_number(rev.period_estimate));
    }
    OutputHeader h;
    h.add("command", "analyze");
    if (!common.config_path.empty()) h.config_echo = ctx.cfg.echo();
    write_report(ctx.out / "analysis.txt", h, e);
    for (const auto& [k, v] : e) std::cout << k << ": " << v << '\n';
    if (a.spectrum) {
        const auto sp = periodogram(t, y, w);
        std::ostringstream os;
        os << h.render() << "frequency_per_ps,power\n";
        for (std::size_t i = 0; i < sp.frequency.size(); ++i)
            os << format_number(sp.frequency[i]) << ',' << format_number(sp.power[i]) << '\n';
        write_text_file(ctx.out / "analysis_spectrum.csv", os.str());
    }
}

// ---------------------------------------------------------------- reproduce

fs::path preset_dir(const std::string& flag)
{
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("ROTALIGN_PRESETS")) return env;
    return ROTALIGN_PRESET_DIR;
}

void reproduce_traces(Context& ctx, const std::string& fig)
{
    const auto delays = ctx.cfg.delay_grid();
    auto intensities = ctx.cfg.scan.intensities_W_cm2;
    if (intensities.empty()) intensities = {ctx.cfg.setup.pulse.peak_intensity()};
    const auto& setup = ctx.cfg.setup;
    const auto units = ReducedUnits::for_molecule(setup.molecule);
    const auto support = setup.pulse.support(setup.propagation.handoff_threshold);
    std::vector<PlotSeries> series;
    std::vector<std::pair<std::string, std::string>> report;
    for (double intensity : intensities) {
        const auto trace = simulate_one(ctx, intensity, delays);
        auto header = base_header(ctx, "reproduce " + fig);
        header.add("peak_intensity_W_cm2", intensity);
        const std::string tag = intensities.size() == 1 ? "" : "_" + intensity_tag(intensity);
        write_trajectory_csv(ctx.out / (fig + "_trajectory" + tag + ".csv"), header, trace);
        series.push_back({format_number(intensity) + " W/cm^2", trace.times_ps, trace.cos2_2d});
        if (ctx.svg && trace.pendular_weights.cols() > 0 && fig == "fig2b")
            plot_weights(ctx.out / (fig + "_weights" + tag + ".svg"), "pendular weights", trace);

        const std::string p = format_number(intensity) + " ";
        const double dw = reduced_coupling(setup.molecule, intensity);
        if (dw > 0.0 && fig != "fig3a") {
            const auto spec = eigensolve_pendular(setup.basis, dw);
            const double gap = gap_frequency(spec, 0, 2, units);
            const auto window = plateau_window(setup.pulse.with_peak(intensity), 1.0 / gap);
            const auto osc = dominant_frequency(trace, window);
            report.emplace_back(p + "plateau_frequency_per_ps", format_number(osc.dominant_frequency));
            report.emplace_back(p + "gap_frequency_per_ps", format_number(gap));
            report.emplace_back(p + "plateau_amplitude", format_number(osc.amplitude));
        }
        if (trace.times_ps.back() - support.end_ps >= units.revival_period_ps()) {
            const auto rev = revival_contrast(trace, support.end_ps, units.revival_period_ps());
            report.emplace_back(p + "post_pulse_contrast", format_number(rev.contrast));
            report.emplace_back(p + "post_pulse_mean", format_number(rev.mean_level));
            report.emplace_back(p + "revival_period_estimate_ps", format_number(rev.period_estimate));
        }
    }
    if (fig == "fig2b") {
        const double dw = reduced_coupling(setup.molecule, setup.pulse.peak_intensity());
        write_spectrum_csv(ctx.out / "fig2a_spectrum.csv", base_header(ctx, "reproduce fig2b"),
                           {eigensolve_converged(setup.basis, dw, 12)}, 12);
    }
    write_report(ctx.out / (fig + "_report.txt"), base_header(ctx, "reproduce " + fig), report);
    if (ctx.svg) write_line_plot_svg(ctx.out / (fig + ".svg"), fig, "delay (ps)", "<cos^2 theta_2D>", series);
}

bool do_reproduce(const std::string& fig, const CommonOptions& common, const std::string& presets)
{
    const auto path = preset_dir(presets) / (fig + ".json");
    if (!fs::exists(path)) throw IoError("preset not found: " + path.string());
    auto preset = load_config(path);
    if (common.format.empty()) preset.outputs.format = OutputFormat::CsvSvg;
    const auto ctx_base = make_context(common, preset);
    Context ctx = ctx_base;
    if (fig == "fig4") {
        const auto res = run_intensity_scan(ctx.cfg.setup, ctx.cfg.focal, ctx.cfg.scan.intensities_W_cm2,
                                            ctx.cfg.delay_grid(), ctx.threads);
        write_scan_csv(ctx.out / "fig4_scan.csv", base_header(ctx, "reproduce fig4"), res);
        if (ctx.svg)
            write_heatmap_svg(ctx.out / "fig4.svg", "<cos^2 theta_2D>", "delay (ps)", "peak intensity (W/cm^2)",
                              res.delays_ps, res.intensities, res.cos2_2d);
        const auto m = map_structure(ctx, res);
        write_map_report(ctx, res, m);
        fs::rename(ctx.out / "map_report.txt", ctx.out / "fig4_report.txt");
        return std::all_of(res.row_ok.begin(), res.row_ok.end(), [](bool b) { return b; });
    }
    reproduce_traces(ctx, fig);
    return true;
}

int report_error(const char* category, const std::string& what, int code)
{
    std::cerr << "error[" << category << "]: " << what << '\n';
    return code;
}

} // namespace

int cli_main(int argc, const char* const* argv)
{
    CLI::App app{"Laser-driven rigid-rotor alignment simulator"};
    app.set_version_flag("--version", engine_version());
    app.require_subcommand(1);

    CommonOptions common;
    auto add_common = [&common](CLI::App* sub, bool grids) {
        sub->add_option("--config", common.config_path, "JSON configuration file");
        sub->add_option("--out", common.out_dir, "output directory");
        sub->add_option("--threads", common.threads, "worker threads (default: ROTALIGN_THREADS or hardware)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--format", common.format, "csv or csv+svg")->check(CLI::IsMember({"csv", "csv+svg"}));
        if (grids) {
            sub->add_option("--delays", common.delays, "delay grid a:b:step or list (ps)");
            sub->add_option("--intensities", common.intensities, "intensity grid a:b:step or list (W/cm^2)");
        }
    };

    auto* simulate = app.add_subcommand("simulate", "propagate one configuration and write the trajectory");
    add_common(simulate, true);
    auto* scan = app.add_subcommand("scan", "intensity x delay map");
    add_common(scan, true);

    auto* spectrum = app.add_subcommand("spectrum", "pendular energies over a delta_omega grid");
    add_common(spectrum, false);
    std::string dw_grid;
    int states = 10;
    spectrum->add_option("--dw", dw_grid, "delta_omega grid a:b:step or list")->required();
    spectrum->add_option("--states", states, "number of lowest states")->check(CLI::PositiveNumber);

    auto* frames = app.add_subcommand("frames", "angular density tables per snapshot");
    add_common(frames, false);

    auto* analyze = app.add_subcommand("analyze", "frequency and revival analysis of a trajectory CSV");
    add_common(analyze, false);
    AnalyzeOptions aopt;
    analyze->add_option("--input", aopt.input, "trajectory CSV")->required();
    analyze->add_option("--column", aopt.column, "column to analyze");
    analyze->add_option("--window", aopt.window, "analysis window a:b (ps)");
    analyze->add_option("--pulse-end", aopt.pulse_end_ps, "pulse end (ps) for the revival contrast");
    analyze->add_option("--revival-period", aopt.revival_period_ps, "revival period (ps)");
    analyze->add_option("--components", aopt.components, "number of sinusoid components")->check(CLI::PositiveNumber);
    analyze->add_flag("--spectrum", aopt.spectrum, "also write the periodogram CSV");

    auto* reproduce = app.add_subcommand("reproduce", "run a stored figure preset");
    add_common(reproduce, true);
    std::string figure, presets;
    reproduce->add_option("figure", figure, "fig2b, fig3a, fig3b, fig3c or fig4")
        ->required()
        ->check(CLI::IsMember({"fig2b", "fig3a", "fig3b", "fig3c", "fig4"}));
    reproduce->add_option("--presets", presets, "preset directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ConfigFailure;
    }

    try {
        bool complete = true;
        if (simulate->parsed()) {
            do_simulate(make_context(common));
        } else if (scan->parsed()) {
            complete = do_scan(make_context(common));
        } else if (spectrum->parsed()) {
            Context ctx;
            if (!common.config_path.empty()) {
                ctx = make_context(common);
            } else {
                ctx.cfg.setup.pulse = PulseEnvelope(GaussianShape{}, 0.0);
                ctx.out = common.out_dir;
                if (!common.format.empty()) ctx.cfg.outputs.format = parse_format(common.format);
                ctx.svg = ctx.cfg.outputs.format == OutputFormat::CsvSvg;
            }
            do_spectrum(ctx, parse_grid(dw_grid), states);
        } else if (frames->parsed()) {
            do_frames(make_context(common));
        } else if (analyze->parsed()) {
            do_analyze(aopt, common);
        } else if (reproduce->parsed()) {
            complete = do_reproduce(figure, common, presets);
        }
        return complete ? Success : NumericalFailure;
    } catch (const ConfigError& e) {
        return report_error("config", e.what(), ConfigFailure);
    } catch (const IoError& e) {
        return report_error("io", e.what(), IoFailure);
    } catch (const fs::filesystem_error& e) {
        return report_error("io", e.what(), IoFailure);
    } catch (const NumericalError& e) {
        return report_error("numerical", e.what(), NumericalFailure);
    } catch (const std::invalid_argument& e) {
        return report_error("config", e.what(), ConfigFailure);
    } catch (const std::domain_error& e) {
        return report_error("config", e.what(), ConfigFailure);
    } catch (const std::exception& e) {
        return report_error("numerical", e.what(), NumericalFailure);
    }
}

int cli_main(const std::vector<std::string>& args)
{
    std::vector<const char*> argv{"rotalign"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

} // namespace rotalign::cli
