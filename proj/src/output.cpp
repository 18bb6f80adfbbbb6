#include "rotalign/output.hpp"

#include "rotalign/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace rotalign {

std::string engine_version()
{
    return std::string("rotalign ") + ROTALIGN_VERSION;
}

std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string OutputHeader::render() const
{
    std::ostringstream os;
    os << "# engine: " << engine_version() << '\n';
    for (const auto& [k, v] : fields) os << "# " << k << ": " << v << '\n';
    if (!config_echo.empty()) {
        os << "# config:\n";
        std::istringstream in(config_echo);
        for (std::string line; std::getline(in, line);) os << "#   " << line << '\n';
    }
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    out.close();
    if (!out) throw IoError("write failed for " + path.string());
}

void write_trajectory_csv(const std::filesystem::path& path, const OutputHeader& header, const AlignmentTrace& tr)
{
    std::ostringstream os;
    os << header.render();
    os << "t_ps,cos2_3d,cos2_2d";
    for (int label : tr.tracked_labels) os << ",w_" << label;
    os << '\n';
    for (std::size_t i = 0; i < tr.size(); ++i) {
        os << format_number(tr.times_ps[i]) << ',' << format_number(tr.cos2_3d[i]) << ','
           << format_number(tr.cos2_2d[i]);
        for (Eigen::Index k = 0; k < tr.pendular_weights.cols(); ++k)
            os << ',' << format_number(tr.pendular_weights(static_cast<Eigen::Index>(i), k));
        os << '\n';
    }
    write_text_file(path, os.str());
}

void write_scan_csv(const std::filesystem::path& path, const OutputHeader& header, const ScanResult& scan)
{
    std::ostringstream os;
    os << header.render();
    for (const auto& [k, v] : scan.metadata) os << "# " << k << ": " << v << '\n';
    for (std::size_t r = 0; r < scan.intensities.size(); ++r)
        if (!scan.row_ok[r])
            os << "# failed_row: intensity=" << format_number(scan.intensities[r]) << " error=" << scan.row_error[r]
               << '\n';
    os << "intensity_W_cm2,delay_ps,cos2_2d\n";
    for (std::size_t r = 0; r < scan.intensities.size(); ++r)
        for (std::size_t c = 0; c < scan.delays_ps.size(); ++c)
            os << format_number(scan.intensities[r]) << ',' << format_number(scan.delays_ps[c]) << ','
               << format_number(scan.cos2_2d[r][c]) << '\n';
    write_text_file(path, os.str());
}

void write_spectrum_csv(const std::filesystem::path& path, const OutputHeader& header,
                        const std::vector<PendularSpectrum>& spectra, int n_states)
{
    std::ostringstream os;
    os << header.render();
    os << "delta_omega,label,energy,bound,cos2,converged\n";
    for (const auto& s : spectra) {
        const int n = std::min(n_states, s.size());
        for (int k = 0; k < n; ++k)
            os << format_number(s.delta_omega) << ',' << s.labels[k] << ',' << format_number(s.energies[k]) << ','
               << (s.bound[k] ? 1 : 0) << ',' << format_number(s.cos2[k]) << ',' << (s.converged[k] ? 1 : 0) << '\n';
    }
    write_text_file(path, os.str());
}

void write_frames_csv(const std::filesystem::path& path, const OutputHeader& header, const std::vector<double>& times,
                      const std::vector<double>& theta, const std::vector<std::vector<double>>& rho)
{
    std::ostringstream os;
    os << header.render();
    os << "t_ps,theta_rad,rho\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t k = 0; k < theta.size(); ++k)
            os << format_number(times[i]) << ',' << format_number(theta[k]) << ',' << format_number(rho[i][k]) << '\n';
    write_text_file(path, os.str());
}

void write_report(const std::filesystem::path& path, const OutputHeader& header,
                  const std::vector<std::pair<std::string, std::string>>& entries)
{
    std::ostringstream os;
    os << header.render();
    for (const auto& [k, v] : entries) os << k << ": " << v << '\n';
    write_text_file(path, os.str());
}

bool CsvTable::has(const std::string& name) const
{
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::vector<double> CsvTable::column(const std::string& name) const
{
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ConfigError("CSV has no column '" + name + "'");
    const auto idx = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[idx]);
    return out;
}

CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    CsvTable t;
    auto split = [](const std::string& line) {
        std::vector<std::string> parts;
        std::stringstream ss(line);
        for (std::string p; std::getline(ss, p, ',');) {
            p.erase(0, p.find_first_not_of(" \t\r"));
            p.erase(p.find_last_not_of(" \t\r") + 1);
            parts.push_back(p);
        }
        return parts;
    };
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto parts = split(line);
        if (t.columns.empty()) {
            t.columns = parts;
            continue;
        }
        if (parts.size() != t.columns.size())
            throw ConfigError(path.string() + " line " + std::to_string(lineno) + ": wrong number of columns");
        std::vector<double> row;
        for (const auto& p : parts) {
            if (p == "nan") {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            try {
                std::size_t used = 0;
                row.push_back(std::stod(p, &used));
                if (used != p.size()) throw std::invalid_argument(p);
            } catch (const std::exception&) {
                throw ConfigError(path.string() + " line " + std::to_string(lineno) + ": not a number '" + p + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw ConfigError(path.string() + ": no header line");
    return t;
}

namespace {

constexpr double kWidth = 720, kHeight = 440, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::pair<double, double> finite_range(const std::vector<double>& v)
{
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : v)
        if (std::isfinite(x)) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    if (!(hi >= lo)) return {0.0, 1.0};
    if (hi == lo) return {lo - 0.5, hi + 0.5};
    return {lo, hi};
}

std::string svg_open(const std::string& title)
{
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
       << "</text>\n";
    return os.str();
}

std::string axes(double x0, double x1, double y0, double y1, const std::string& xl, const std::string& yl)
{
    std::ostringstream os;
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = k / 4.0;
        const double px = kLeft + fx * pw, py = kTop + ph - fx * ph;
        os << "<text x=\"" << px << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
           << format_number(x0 + fx * (x1 - x0)) << "</text>\n";
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">"
           << format_number(y0 + fx * (y1 - y0)) << "</text>\n";
    }
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << escape(xl)
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << kTop + ph / 2 << ")\">" << escape(yl) << "</text>\n";
    return os.str();
}

} // namespace

void write_line_plot_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<PlotSeries>& series)
{
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
    std::vector<double> xs, ys;
    for (const auto& s : series) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    const auto [x0, x1] = finite_range(xs);
    const auto [y0, y1] = finite_range(ys);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    std::ostringstream os;
    os << svg_open(title) << axes(x0, x1, y0, y1, x_label, y_label);
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = colors[s % 6];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
            if (!std::isfinite(series[s].y[i])) continue;
            const double px = kLeft + (series[s].x[i] - x0) / (x1 - x0) * pw;
            const double py = kTop + ph - (series[s].y[i] - y0) / (y1 - y0) * ph;
            os << format_number(px) << ',' << format_number(py) << ' ';
        }
        os << "\"/>\n";
        os << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 16 + 14 * static_cast<double>(s) << "\" fill=\"" << color
           << "\">" << escape(series[s].label) << "</text>\n";
    }
    os << "</svg>\n";
    write_text_file(path, os.str());
}

void write_heatmap_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<double>& x, const std::vector<double>& y,
                       const std::vector<std::vector<double>>& z)
{
    std::vector<double> all;
    for (const auto& row : z) all.insert(all.end(), row.begin(), row.end());
    const auto [z0, z1] = finite_range(all);
    const auto [x0, x1] = finite_range(x);
    const auto [y0, y1] = finite_range(y);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    const double cw = pw / static_cast<double>(std::max<std::size_t>(x.size(), 1));
    const double ch = ph / static_cast<double>(std::max<std::size_t>(y.size(), 1));
    std::ostringstream os;
    os << svg_open(title);
    for (std::size_t r = 0; r < y.size() && r < z.size(); ++r)
        for (std::size_t c = 0; c < x.size() && c < z[r].size(); ++c) {
            std::string fill = "#808080";
            if (std::isfinite(z[r][c])) {
                const double f = (z[r][c] - z0) / (z1 - z0);
                const int red = static_cast<int>(std::lround(255 * f));
                const int blue = static_cast<int>(std::lround(255 * (1 - f)));
                char buf[16];
                std::snprintf(buf, sizeof buf, "#%02x%02x%02x", red, static_cast<int>(std::lround(80 * (1 - std::abs(2 * f - 1)))), blue);
                fill = buf;
            }
            os << "<rect x=\"" << format_number(kLeft + static_cast<double>(c) * cw) << "\" y=\""
               << format_number(kTop + ph - static_cast<double>(r + 1) * ch) << "\" width=\"" << format_number(cw + 0.3)
               << "\" height=\"" << format_number(ch + 0.3) << "\" fill=\"" << fill << "\"/>\n";
        }
    os << axes(x0, x1, y0, y1, x_label, y_label);
    os << "<text x=\"" << kWidth - kRight << "\" y=\"" << kTop - 6 << "\" text-anchor=\"end\">color: "
       << format_number(z0) << " (blue) to " << format_number(z1) << " (red)</text>\n";
    os << "</svg>\n";
    write_text_file(path, os.str());
}

void write_polar_svg(const std::filesystem::path& path, const std::string& title, const std::vector<double>& theta,
                     const std::vector<double>& rho)
{
    const double cx = kWidth / 2, cy = kHeight / 2 + 10, radius = 170;
    double rmax = 0.0;
    for (double r : rho)
        if (std::isfinite(r)) rmax = std::max(rmax, r);
    if (!(rmax > 0.0)) rmax = 1.0;
    std::ostringstream os;
    os << svg_open(title);
    os << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << radius << "\" fill=\"none\" stroke=\"#bbbbbb\"/>\n";
    os << "<line x1=\"" << cx << "\" y1=\"" << cy - radius << "\" x2=\"" << cx << "\" y2=\"" << cy + radius
       << "\" stroke=\"#bbbbbb\"/>\n";
    // theta from the vertical polarization axis, mirrored to show both half planes
    os << "<polygon fill=\"#1f77b4\" fill-opacity=\"0.35\" stroke=\"#1f77b4\" points=\"";
    for (int side : {1, -1}) {
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const std::size_t i = side > 0 ? k : theta.size() - 1 - k;
            const double r = radius * (std::isfinite(rho[i]) ? rho[i] : 0.0) / rmax;
            os << format_number(cx + side * r * std::sin(theta[i])) << ',' << format_number(cy - r * std::cos(theta[i]))
               << ' ';
        }
    }
    os << "\"/>\n</svg>\n";
    write_text_file(path, os.str());
}

} // namespace rotalign
