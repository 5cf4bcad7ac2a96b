#include "ntnpred/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <sstream>

#include "ntnpred/errors.hpp"
#include "ntnpred/io.hpp"

#ifndef NTNPRED_GIT_REV
#define NTNPRED_GIT_REV "unknown"
#endif

namespace ntnpred {

namespace fs = std::filesystem;

namespace {

const char* const kCsvHeader =
    "label,channel_profile,ue_speed_kmh,mod_order,eb_n0_db,"
    "ber_uncoded_est,ber_est_lo,ber_est_hi,ber_uncoded_pred,ber_pred_lo,ber_pred_hi,"
    "bler_e,bler_e_lo,bler_e_hi,bler_p,bler_p_lo,bler_p_hi,"
    "tp_e_bps,tp_p_bps,nmse_pred_db,nmse_est_db,nmse_persist_db,"
    "iterations_run,bit_errors_est,bits_est,bit_errors_pred,bits_pred,"
    "block_errors_e,blocks_e,block_errors_p,blocks_p";

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    return out;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError("csv: bad number '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError("csv: bad integer '" + s + "'");
    return v;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// "--" may not appear inside an XML comment.
std::string comment_safe(std::string s) {
    for (std::size_t p; (p = s.find("--")) != std::string::npos;) s.replace(p, 2, "- -");
    return s;
}

std::string fmt(double v, const char* f = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// 1, 2 or 5 times a power of ten, at least `raw`.
double nice_step(double raw) {
    const double p = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * p >= raw) return m * p;
    return 10.0 * p;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : records) {
        const std::vector<std::string> f{
            csv_field(r.label),
            csv_field(r.channel_profile),
            format_double(r.ue_speed_kmh),
            std::to_string(r.mod_order),
            format_double(r.eb_n0_db),
            format_double(r.ber_uncoded_est),
            format_double(r.ber_est_ci.lo),
            format_double(r.ber_est_ci.hi),
            format_double(r.ber_uncoded_pred),
            format_double(r.ber_pred_ci.lo),
            format_double(r.ber_pred_ci.hi),
            format_double(r.bler_e),
            format_double(r.bler_e_ci.lo),
            format_double(r.bler_e_ci.hi),
            format_double(r.bler_p),
            format_double(r.bler_p_ci.lo),
            format_double(r.bler_p_ci.hi),
            format_double(r.tp_e_bps),
            format_double(r.tp_p_bps),
            format_double(r.nmse_pred_db),
            format_double(r.nmse_est_db),
            format_double(r.nmse_persist_db),
            std::to_string(r.iterations_run),
            std::to_string(r.bit_errors_est),
            std::to_string(r.bits_est),
            std::to_string(r.bit_errors_pred),
            std::to_string(r.bits_pred),
            std::to_string(r.block_errors_e),
            std::to_string(r.blocks_e),
            std::to_string(r.block_errors_p),
            std::to_string(r.blocks_p),
        };
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (i) out += ',';
            out += f[i];
        }
        out += '\n';
    }
    return out;
}

std::vector<MetricsRecord> parse_metrics_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) throw ConfigError("csv: unexpected header");
    std::vector<MetricsRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 31) throw ConfigError("csv: expected 31 fields, got " + std::to_string(f.size()));
        MetricsRecord r;
        r.label = f[0];
        r.channel_profile = f[1];
        r.ue_speed_kmh = parse_double(f[2]);
        r.mod_order = static_cast<int>(parse_u64(f[3]));
        r.eb_n0_db = parse_double(f[4]);
        r.ber_uncoded_est = parse_double(f[5]);
        r.ber_est_ci = {parse_double(f[6]), parse_double(f[7])};
        r.ber_uncoded_pred = parse_double(f[8]);
        r.ber_pred_ci = {parse_double(f[9]), parse_double(f[10])};
        r.bler_e = parse_double(f[11]);
        r.bler_e_ci = {parse_double(f[12]), parse_double(f[13])};
        r.bler_p = parse_double(f[14]);
        r.bler_p_ci = {parse_double(f[15]), parse_double(f[16])};
        r.tp_e_bps = parse_double(f[17]);
        r.tp_p_bps = parse_double(f[18]);
        r.nmse_pred_db = parse_double(f[19]);
        r.nmse_est_db = parse_double(f[20]);
        r.nmse_persist_db = parse_double(f[21]);
        r.iterations_run = parse_u64(f[22]);
        r.bit_errors_est = parse_u64(f[23]);
        r.bits_est = parse_u64(f[24]);
        r.bit_errors_pred = parse_u64(f[25]);
        r.bits_pred = parse_u64(f[26]);
        r.block_errors_e = parse_u64(f[27]);
        r.blocks_e = parse_u64(f[28]);
        r.block_errors_p = parse_u64(f[29]);
        r.blocks_p = parse_u64(f[30]);
        out.push_back(std::move(r));
    }
    return out;
}

std::string training_log_csv(const std::vector<EpochLog>& history) {
    std::string out = "epoch,lr,train_loss,val_nmse\n";
    for (const auto& e : history)
        out += std::to_string(e.epoch) + ',' + format_double(e.lr) + ',' + format_double(e.train_loss) + ',' +
               format_double(e.val_nmse) + '\n';
    return out;
}

std::string plot_data_text(const PlotSpec& plot) {
    std::string out = "# " + plot.title + "\n# " + plot.x_label + " | " + plot.y_label + "\n";
    for (std::size_t s = 0; s < plot.series.size(); ++s) {
        const auto& ser = plot.series[s];
        if (s) out += '\n';
        out += "# " + ser.label + '\n';
        for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i)
            out += format_double(ser.x[i]) + ' ' + format_double(ser.y[i]) + '\n';
    }
    return out;
}

std::string svg_line_chart(const PlotSpec& plot) {
    constexpr double W = 720, H = 460, L = 80, R = 190, T = 40, B = 60;
    const double pw = W - L - R, ph = H - T - B;
    auto usable = [&](double y) { return std::isfinite(y) && (!plot.log_y || y > 0.0); };

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : plot.series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !usable(s.y[i])) continue;
            const double y = plot.log_y ? std::log10(s.y[i]) : s.y[i];
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x0 == x1) x0 -= 0.5, x1 += 0.5;
    if (plot.log_y) {
        y0 = std::floor(y0);
        y1 = std::max(std::ceil(y1), y0 + 1);
    } else {
        if (y0 == y1) y0 -= 0.5, y1 += 0.5;
        const double step = nice_step((y1 - y0) / 5.0);
        y0 = std::floor(y0 / step) * step;
        y1 = std::ceil(y1 / step) * step;
    }
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return T + ph - ((plot.log_y ? std::log10(y) : y) - y0) / (y1 - y0) * ph; };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!--\n"
       << comment_safe(plot_data_text(plot)) << "-->\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
       << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << L + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << xml_escape(plot.title) << "</text>\n";

    // Grid and ticks.
    const double xstep = nice_step((x1 - x0) / 8.0);
    for (double x = std::ceil(x0 / xstep) * xstep; x <= x1 + 1e-9 * xstep; x += xstep) {
        os << "<line x1=\"" << fmt(px(x)) << "\" y1=\"" << T << "\" x2=\"" << fmt(px(x)) << "\" y2=\"" << T + ph
           << "\" stroke=\"#ddd\"/>\n<text x=\"" << fmt(px(x)) << "\" y=\"" << T + ph + 18
           << "\" text-anchor=\"middle\">" << fmt(std::abs(x) < 1e-12 ? 0.0 : x) << "</text>\n";
    }
    if (plot.log_y) {
        for (double e = y0; e <= y1 + 1e-9; e += 1.0) {
            const double yy = T + ph - (e - y0) / (y1 - y0) * ph;
            os << "<line x1=\"" << L << "\" y1=\"" << fmt(yy) << "\" x2=\"" << L + pw << "\" y2=\"" << fmt(yy)
               << "\" stroke=\"#ddd\"/>\n<text x=\"" << L - 6 << "\" y=\"" << fmt(yy + 4)
               << "\" text-anchor=\"end\">1e" << static_cast<int>(e) << "</text>\n";
        }
    } else {
        const double ystep = nice_step((y1 - y0) / 5.0);
        for (double y = y0; y <= y1 + 1e-9 * ystep; y += ystep) {
            const double yy = T + ph - (y - y0) / (y1 - y0) * ph;
            os << "<line x1=\"" << L << "\" y1=\"" << fmt(yy) << "\" x2=\"" << L + pw << "\" y2=\"" << fmt(yy)
               << "\" stroke=\"#ddd\"/>\n<text x=\"" << L - 6 << "\" y=\"" << fmt(yy + 4)
               << "\" text-anchor=\"end\">" << fmt(std::abs(y) < 1e-12 * ystep ? 0.0 : y) << "</text>\n";
        }
    }
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n"
       << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">"
       << xml_escape(plot.x_label) << "</text>\n"
       << "<text transform=\"translate(20," << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << xml_escape(plot.y_label) << "</text>\n";

    for (std::size_t s = 0; s < plot.series.size(); ++s) {
        const auto& ser = plot.series[s];
        const char* color = kPalette[s % std::size(kPalette)];
        std::string points;
        for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
            if (!std::isfinite(ser.x[i]) || !usable(ser.y[i])) continue;
            points += fmt(px(ser.x[i])) + ',' + fmt(py(ser.y[i])) + ' ';
            os << "<circle cx=\"" << fmt(px(ser.x[i])) << "\" cy=\"" << fmt(py(ser.y[i])) << "\" r=\"3\" fill=\""
               << color << "\"/>\n";
        }
        if (!points.empty())
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points
               << "\"/>\n";
        const double ly = T + 10 + 18.0 * static_cast<double>(s);
        os << "<line x1=\"" << L + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 36 << "\" y2=\"" << ly
           << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n<text x=\"" << L + pw + 42 << "\" y=\""
           << ly + 4 << "\">" << xml_escape(ser.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

const std::vector<MetricPlotInfo>& metric_plots() {
    static const std::vector<MetricPlotInfo> m{
        {"ber_uncoded_est", "uncoded BER (estimation)", true},
        {"ber_uncoded_pred", "uncoded BER (prediction)", true},
        {"bler_e", "BLER (estimation)", true},
        {"bler_p", "BLER (prediction)", true},
        {"tp_e_bps", "throughput (estimation) [bit/s]", false},
        {"tp_p_bps", "throughput (prediction) [bit/s]", false},
        {"nmse_pred_db", "NMSE predicted slot [dB]", false},
        {"nmse_est_db", "NMSE interpolated estimate [dB]", false},
        {"nmse_persist_db", "NMSE persistence [dB]", false},
    };
    return m;
}

PlotSpec metric_plot(const std::vector<MetricsRecord>& records, const MetricPlotInfo& metric) {
    auto value = [&](const MetricsRecord& r) {
        const std::string& n = metric.name;
        if (n == "ber_uncoded_est") return r.ber_uncoded_est;
        if (n == "ber_uncoded_pred") return r.ber_uncoded_pred;
        if (n == "bler_e") return r.bler_e;
        if (n == "bler_p") return r.bler_p;
        if (n == "tp_e_bps") return r.tp_e_bps;
        if (n == "tp_p_bps") return r.tp_p_bps;
        if (n == "nmse_pred_db") return r.nmse_pred_db;
        if (n == "nmse_est_db") return r.nmse_est_db;
        if (n == "nmse_persist_db") return r.nmse_persist_db;
        throw UsageError("unknown metric '" + n + "'");
    };
    PlotSpec p{metric.name, "Eb/N0 [dB]", metric.y_label, metric.log_y, {}};
    for (const auto& r : records) {
        auto it = std::find_if(p.series.begin(), p.series.end(), [&](const PlotSeries& s) { return s.label == r.label; });
        if (it == p.series.end()) {
            p.series.push_back({r.label, {}, {}});
            it = std::prev(p.series.end());
        }
        it->x.push_back(r.eb_n0_db);
        it->y.push_back(value(r));
    }
    return p;
}

std::vector<fs::path> write_metric_plots(const fs::path& dir, const std::vector<MetricsRecord>& records) {
    std::vector<fs::path> written;
    for (const auto& m : metric_plots()) {
        const auto plot = metric_plot(records, m);
        const auto dat = dir / (m.name + ".dat");
        const auto svg = dir / (m.name + ".svg");
        write_file_atomic(dat, plot_data_text(plot));
        write_file_atomic(svg, svg_line_chart(plot));
        written.push_back(dat);
        written.push_back(svg);
    }
    return written;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& a : artifacts) files.push_back(a.generic_string());
    return {{"command", command},           {"config", config},
            {"seeds", seeds},               {"artifacts", files},
            {"started_utc", started_utc},   {"finished_utc", finished_utc},
            {"wall_time_s", wall_time_s},   {"tool_version", tool_version()},
            {"git_revision", git_revision()}, {"warnings", warnings}};
}

void RunManifest::write(const fs::path& path) {
    if (std::find(artifacts.begin(), artifacts.end(), path) == artifacts.end()) artifacts.push_back(path);
    if (finished_utc.empty()) finished_utc = utc_timestamp();
    write_file_atomic(path, to_json().dump(2) + "\n");
}

std::string tool_version() { return "ntnpred 1.0.0"; }

std::string git_revision() { return NTNPRED_GIT_REV; }

std::string utc_timestamp() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace ntnpred
