#include "rotalign/config.hpp"

#include "rotalign/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <type_traits>
#include <variant>
#include <sstream>

namespace rotalign {

using nlohmann::json;

std::string to_string(OutputFormat f)
{
    return f == OutputFormat::Csv ? "csv" : "csv+svg";
}

OutputFormat parse_format(const std::string& text)
{
    if (text == "csv") return OutputFormat::Csv;
    if (text == "csv+svg") return OutputFormat::CsvSvg;
    throw ConfigError("unknown output format '" + text + "' (expected csv or csv+svg)");
}

namespace {

void reject_unknown(const json& obj, const std::string& section, const std::set<std::string>& allowed)
{
    if (!obj.is_object()) throw ConfigError(section + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) throw ConfigError(section + ": unknown key '" + key + "'");
    }
}

template <class T>
void read(const json& obj, const std::string& section, const char* key, T& out)
{
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(section + "." + key + ": wrong type");
    }
}

std::vector<double> read_grid(const json& v, const std::string& where)
{
    if (v.is_string()) return parse_grid(v.get<std::string>());
    if (v.is_array()) {
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError(where + ": grid entries must be numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }
    if (v.is_object()) {
        reject_unknown(v, where, {"from", "to", "step"});
        if (!v.contains("from") || !v.contains("to") || !v.contains("step"))
            throw ConfigError(where + ": range needs from, to and step");
        std::ostringstream s;
        s.precision(17);
        s << v.at("from").get<double>() << ':' << v.at("to").get<double>() << ':' << v.at("step").get<double>();
        return parse_grid(s.str());
    }
    throw ConfigError(where + ": expected a list, a range object or an 'a:b:step' string");
}

EdgeSmoothing parse_smoothing(const std::string& s)
{
    if (s == "erf") return EdgeSmoothing::ErrorFunction;
    if (s == "cos2") return EdgeSmoothing::CosineSquared;
    throw ConfigError("pulse.smoothing: expected erf or cos2, got '" + s + "'");
}

RecoilModel parse_recoil(const std::string& s)
{
    if (s == "axial") return RecoilModel::Axial;
    if (s == "axial_blur" || s == "axial-with-blur") return RecoilModel::AxialWithBlur;
    throw ConfigError("detection.recoil: expected axial or axial_blur, got '" + s + "'");
}

ProbeAxis parse_probe_axis(const std::string& s)
{
    if (s == "Y" || s == "y") return ProbeAxis::Y;
    if (s == "X" || s == "x") return ProbeAxis::X;
    throw ConfigError("detection.probe_axis: expected Y or X, got '" + s + "'");
}

template <class F>
auto rethrow_as_config(const std::string& where, F&& f)
{
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

} // namespace

std::vector<double> parse_grid(const std::string& text)
{
    auto number = [&text](const std::string& tok) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse grid '" + text + "'");
        }
        while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
        if (used != tok.size() || !std::isfinite(v)) throw ConfigError("cannot parse grid '" + text + "'");
        return v;
    };
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw ConfigError("grid range must be a:b:step, got '" + text + "'");
        const double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
        if (!(step > 0.0) || b < a) throw ConfigError("grid range needs step > 0 and b >= a: '" + text + "'");
        const auto n = static_cast<long long>(std::floor((b - a) / step * (1.0 + 1e-12) + 1e-9));
        if (n > 10000000) throw ConfigError("grid '" + text + "' is too large");
        for (long long k = 0; k <= n; ++k) out.push_back(a + static_cast<double>(k) * step);
        return out;
    }
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) {
        if (p.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(number(p));
    }
    if (out.empty()) throw ConfigError("empty grid '" + text + "'");
    return out;
}

void RunConfig::validate() const
{
    rethrow_as_config("molecule", [&] { setup.molecule.validate(); return 0; });
    rethrow_as_config("pulse", [&] { setup.pulse.validate(); return 0; });
    rethrow_as_config("basis", [&] { setup.basis.validate(); return 0; });
    rethrow_as_config("propagation", [&] { setup.propagation.validate(); return 0; });
    rethrow_as_config("detection", [&] { setup.detection.validate(); return 0; });
    if (focal) rethrow_as_config("focal", [&] { focal->validate(); return 0; });
    if (setup.initial_j < std::abs(setup.basis.m) || setup.basis.index_of(setup.initial_j) < 0)
        throw ConfigError("initial_j is not part of the basis");
    if (setup.tracked_states < 0 || setup.tracked_states > setup.basis.size())
        throw ConfigError("outputs.tracked_states must be in [0, basis size]");
    if (!std::isfinite(time.t0_ps) || !std::isfinite(time.t1_ps) || !(time.t1_ps > time.t0_ps))
        throw ConfigError("time: t1_ps must exceed t0_ps");
    for (double i : scan.intensities_W_cm2)
        if (!(i >= 0.0) || !std::isfinite(i)) throw ConfigError("scan.intensities_W_cm2: values must be finite and >= 0");
    for (std::size_t k = 1; k < scan.delays_ps.size(); ++k)
        if (!(scan.delays_ps[k] > scan.delays_ps[k - 1])) throw ConfigError("scan.delays_ps must be strictly increasing");
    if (!(outputs.frame_stride_ps > 0.0)) throw ConfigError("outputs.frame_stride_ps must be positive");
    if (outputs.theta_points < 3) throw ConfigError("outputs.theta_points must be >= 3");
}

std::vector<double> RunConfig::delay_grid() const
{
    if (!scan.delays_ps.empty()) return scan.delays_ps;
    return record_grid(time.t0_ps, time.t1_ps, setup.propagation.record_stride_ps);
}

std::string RunConfig::echo() const
{
    json j;
    j["name"] = name;
    const auto& m = setup.molecule;
    j["molecule"] = {{"name", m.name},
                     {"rotational_constant_cm", m.rotational_constant_cm},
                     {"polarizability_anisotropy_A3", m.polarizability_anisotropy_A3},
                     {"source", m.source}};
    json p;
    p["peak_intensity_W_cm2"] = setup.pulse.peak_intensity();
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, GaussianShape>) {
                p["shape"] = "gaussian";
                p["fwhm_ps"] = s.fwhm_ps;
                p["t_center_ps"] = s.t_center_ps;
            } else if constexpr (std::is_same_v<S, RampPlateauShape>) {
                p["shape"] = "ramp_plateau";
                p["rise_ps"] = s.rise_ps;
                p["plateau_ps"] = s.plateau_ps;
                p["fall_ps"] = s.fall_ps;
                p["t_start_ps"] = s.t_start_ps;
                p["smoothing"] = s.smoothing == EdgeSmoothing::ErrorFunction ? "erf" : "cos2";
            } else {
                p["shape"] = "sampled";
                p["file"] = pulse_file.generic_string();
                p["samples"] = s.t_ps.size();
            }
        },
        setup.pulse.shape());
    j["pulse"] = p;
    j["basis"] = {{"j_max", setup.basis.j_max}, {"m", setup.basis.m}, {"parity", to_string(setup.basis.parity)}};
    const auto& c = setup.propagation;
    j["propagation"] = {{"method", to_string(c.method)},
                        {"dt", c.dt},
                        {"tolerance", c.tolerance},
                        {"record_stride_ps", c.record_stride_ps},
                        {"dw_step_fraction", c.dw_step_fraction},
                        {"truncation_threshold", c.truncation_threshold},
                        {"handoff_threshold", c.handoff_threshold},
                        {"abort_on_truncation", c.abort_on_truncation},
                        {"auto_extend_basis", c.auto_extend_basis},
                        {"j_max_limit", c.j_max_limit}};
    const auto& d = setup.detection;
    j["detection"] = {{"recoil", d.recoil == RecoilModel::Axial ? "axial" : "axial_blur"},
                      {"blur_rad", d.blur_rad},
                      {"selectivity_exponent", d.selectivity_exponent},
                      {"probe_axis", d.probe_axis == ProbeAxis::Y ? "Y" : "X"}};
    if (focal)
        j["focal"] = {{"w_align_um", focal->w_align_um},
                      {"w_probe_um", focal->w_probe_um},
                      {"probe_order", focal->probe_order},
                      {"n_bins", focal->n_bins}};
    else
        j["focal"] = nullptr;
    j["time"] = {{"t0_ps", time.t0_ps}, {"t1_ps", time.t1_ps}};
    j["scan"] = {{"intensities_W_cm2", scan.intensities_W_cm2}, {"delays_ps", scan.delays_ps}};
    j["outputs"] = {{"format", to_string(outputs.format)},
                    {"snapshots", outputs.snapshots},
                    {"frame_stride_ps", outputs.frame_stride_ps},
                    {"theta_points", outputs.theta_points},
                    {"tracked_states", setup.tracked_states}};
    j["initial_j"] = setup.initial_j;
    j["seed"] = seed;
    return j.dump(1);
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir)
{
    json root;
    try {
        root = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    reject_unknown(root, "config",
                   {"name", "description", "molecule", "pulse", "basis", "propagation", "detection", "focal", "time",
                    "scan", "outputs", "initial_j", "seed"});
    RunConfig cfg;
    read(root, "config", "name", cfg.name);
    read(root, "config", "initial_j", cfg.setup.initial_j);
    read(root, "config", "seed", cfg.seed);

    if (root.contains("molecule")) {
        const auto& m = root["molecule"];
        reject_unknown(m, "molecule", {"name", "rotational_constant_cm", "polarizability_anisotropy_A3", "source"});
        auto& mol = cfg.setup.molecule;
        read(m, "molecule", "name", mol.name);
        read(m, "molecule", "rotational_constant_cm", mol.rotational_constant_cm);
        read(m, "molecule", "polarizability_anisotropy_A3", mol.polarizability_anisotropy_A3);
        read(m, "molecule", "source", mol.source);
    }
    if (cfg.setup.molecule.source.empty()) cfg.setup.molecule.source = "literature values (configuration defaults)";

    if (!root.contains("pulse")) throw ConfigError("pulse: section is required");
    {
        const auto& p = root["pulse"];
        if (!p.is_object()) throw ConfigError("pulse: expected an object");
        std::string shape = "gaussian";
        read(p, "pulse", "shape", shape);
        double peak = 0.0;
        if (!p.contains("peak_intensity_W_cm2")) throw ConfigError("pulse.peak_intensity_W_cm2 is required");
        read(p, "pulse", "peak_intensity_W_cm2", peak);
        if (shape == "gaussian") {
            reject_unknown(p, "pulse", {"shape", "peak_intensity_W_cm2", "fwhm_ps", "t_center_ps"});
            GaussianShape g;
            read(p, "pulse", "fwhm_ps", g.fwhm_ps);
            read(p, "pulse", "t_center_ps", g.t_center_ps);
            cfg.setup.pulse = PulseEnvelope(g, peak);
        } else if (shape == "ramp_plateau") {
            reject_unknown(p, "pulse",
                           {"shape", "peak_intensity_W_cm2", "rise_ps", "plateau_ps", "fall_ps", "t_start_ps", "smoothing"});
            RampPlateauShape r;
            read(p, "pulse", "rise_ps", r.rise_ps);
            read(p, "pulse", "plateau_ps", r.plateau_ps);
            read(p, "pulse", "fall_ps", r.fall_ps);
            read(p, "pulse", "t_start_ps", r.t_start_ps);
            std::string smoothing = "erf";
            read(p, "pulse", "smoothing", smoothing);
            r.smoothing = parse_smoothing(smoothing);
            cfg.setup.pulse = PulseEnvelope(r, peak);
        } else if (shape == "sampled") {
            reject_unknown(p, "pulse", {"shape", "peak_intensity_W_cm2", "file"});
            std::string file;
            read(p, "pulse", "file", file);
            if (file.empty()) throw ConfigError("pulse.file is required for a sampled envelope");
            cfg.pulse_file = std::filesystem::path(file);
            const auto full = cfg.pulse_file.is_absolute() ? cfg.pulse_file : base_dir / cfg.pulse_file;
            cfg.setup.pulse = load_sampled_profile(full, peak);
        } else {
            throw ConfigError("pulse.shape: expected gaussian, ramp_plateau or sampled, got '" + shape + "'");
        }
    }

    if (root.contains("basis")) {
        const auto& b = root["basis"];
        reject_unknown(b, "basis", {"j_max", "m", "parity"});
        read(b, "basis", "j_max", cfg.setup.basis.j_max);
        read(b, "basis", "m", cfg.setup.basis.m);
        std::string parity = to_string(cfg.setup.basis.parity);
        read(b, "basis", "parity", parity);
        cfg.setup.basis.parity = rethrow_as_config("basis.parity", [&] { return parse_parity(parity); });
    }

    if (root.contains("propagation")) {
        const auto& q = root["propagation"];
        reject_unknown(q, "propagation",
                       {"method", "dt", "tolerance", "record_stride_ps", "dw_step_fraction", "truncation_threshold",
                        "handoff_threshold", "abort_on_truncation", "auto_extend_basis", "j_max_limit"});
        auto& c = cfg.setup.propagation;
        std::string method = to_string(c.method);
        read(q, "propagation", "method", method);
        c.method = rethrow_as_config("propagation.method", [&] { return parse_method(method); });
        read(q, "propagation", "dt", c.dt);
        read(q, "propagation", "tolerance", c.tolerance);
        read(q, "propagation", "record_stride_ps", c.record_stride_ps);
        read(q, "propagation", "dw_step_fraction", c.dw_step_fraction);
        read(q, "propagation", "truncation_threshold", c.truncation_threshold);
        read(q, "propagation", "handoff_threshold", c.handoff_threshold);
        read(q, "propagation", "abort_on_truncation", c.abort_on_truncation);
        read(q, "propagation", "auto_extend_basis", c.auto_extend_basis);
        read(q, "propagation", "j_max_limit", c.j_max_limit);
    }

    if (root.contains("detection")) {
        const auto& d = root["detection"];
        reject_unknown(d, "detection", {"recoil", "blur_rad", "selectivity_exponent", "probe_axis"});
        auto& det = cfg.setup.detection;
        std::string recoil = "axial", axis = "Y";
        read(d, "detection", "recoil", recoil);
        read(d, "detection", "probe_axis", axis);
        det.recoil = parse_recoil(recoil);
        det.probe_axis = parse_probe_axis(axis);
        read(d, "detection", "blur_rad", det.blur_rad);
        read(d, "detection", "selectivity_exponent", det.selectivity_exponent);
    }

    if (root.contains("focal") && !root["focal"].is_null()) {
        const auto& f = root["focal"];
        reject_unknown(f, "focal", {"w_align_um", "w_probe_um", "probe_order", "n_bins"});
        FocalGeometry g;
        read(f, "focal", "w_align_um", g.w_align_um);
        read(f, "focal", "w_probe_um", g.w_probe_um);
        read(f, "focal", "probe_order", g.probe_order);
        read(f, "focal", "n_bins", g.n_bins);
        cfg.focal = g;
    }

    if (root.contains("time")) {
        const auto& t = root["time"];
        reject_unknown(t, "time", {"t0_ps", "t1_ps"});
        read(t, "time", "t0_ps", cfg.time.t0_ps);
        read(t, "time", "t1_ps", cfg.time.t1_ps);
    }

    if (root.contains("scan")) {
        const auto& s = root["scan"];
        reject_unknown(s, "scan", {"intensities_W_cm2", "delays_ps"});
        if (s.contains("intensities_W_cm2"))
            cfg.scan.intensities_W_cm2 = read_grid(s["intensities_W_cm2"], "scan.intensities_W_cm2");
        if (s.contains("delays_ps")) cfg.scan.delays_ps = read_grid(s["delays_ps"], "scan.delays_ps");
    }

    if (root.contains("outputs")) {
        const auto& o = root["outputs"];
        reject_unknown(o, "outputs", {"format", "snapshots", "frame_stride_ps", "theta_points", "tracked_states"});
        std::string format = to_string(cfg.outputs.format);
        read(o, "outputs", "format", format);
        cfg.outputs.format = parse_format(format);
        read(o, "outputs", "snapshots", cfg.outputs.snapshots);
        read(o, "outputs", "frame_stride_ps", cfg.outputs.frame_stride_ps);
        read(o, "outputs", "theta_points", cfg.outputs.theta_points);
        read(o, "outputs", "tracked_states", cfg.setup.tracked_states);
    }

    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open configuration file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

} // namespace rotalign
