#ifndef SPI_IO_HPP
#define SPI_IO_HPP

// CSV and SVG formats. Numbers are written in shortest round-trip form, so a
// written file reads back bit-exactly and identical runs give identical bytes.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "spi/experiment.hpp"
#include "spi/function_space.hpp"
#include "spi/solvers.hpp"

namespace spi {

/// Error with the offending line number (1-based) for malformed input.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

inline std::string format_number(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s, std::size_t line)
{
    if (s == "inf" || s == "+inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (!s.empty() && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || first == last) {
        throw ParseError(line, "not a number: '" + std::string(s) + "'");
    }
    return v;
}

template <typename Int>
Int parse_integer(std::string_view s, std::size_t line)
{
    Int v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        throw ParseError(line, "not an integer: '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline std::string_view strip_cr(std::string_view s)
{
    if (!s.empty() && s.back() == '\r') {
        s.remove_suffix(1);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Dataset: header "y,v1,...,vN", one sample per row.

inline void write_dataset_csv(std::ostream& os, const Dataset& data)
{
    os << 'y';
    for (std::size_t i = 1; i <= data.resolution(); ++i) {
        os << ",v" << i;
    }
    os << '\n';
    for (const auto& s : data.samples()) {
        os << static_cast<int>(s.y);
        for (double v : s.x.values()) {
            os << ',' << format_number(v);
        }
        os << '\n';
    }
}

inline Dataset read_dataset_csv(std::istream& is)
{
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(is, line)) {
        throw ParseError(lineno, "missing header");
    }
    const auto header = split_csv(strip_cr(line));
    if (header.size() < 2 || header[0] != "y") {
        throw ParseError(lineno, "header must be y,v1,...,vN");
    }
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (header[i] != "v" + std::to_string(i)) {
            throw ParseError(lineno, "unexpected column '" + std::string(header[i]) + "'");
        }
    }
    const std::size_t resolution = header.size() - 1;
    std::vector<Sample> samples;
    while (std::getline(is, line)) {
        ++lineno;
        const auto sv = strip_cr(line);
        if (sv.empty()) {
            continue;
        }
        const auto fields = split_csv(sv);
        if (fields.size() != resolution + 1) {
            throw ParseError(lineno, "expected " + std::to_string(resolution + 1) + " fields, got "
                                         + std::to_string(fields.size()));
        }
        Label y;
        try {
            y = label_from_int(parse_integer<int>(fields[0], lineno));
        } catch (const std::invalid_argument& e) {
            throw ParseError(lineno, e.what());
        }
        std::vector<double> values(resolution);
        for (std::size_t i = 0; i < resolution; ++i) {
            values[i] = parse_number(fields[i + 1], lineno);
            if (!std::isfinite(values[i])) {
                throw ParseError(lineno, "non-finite sample value");
            }
        }
        samples.emplace_back(GridFunction(std::move(values)), y);
    }
    if (samples.empty()) {
        throw ParseError(lineno, "no samples");
    }
    return Dataset(std::move(samples));
}

// ---------------------------------------------------------------------------
// Chain checkpoints: "k,bias,w1,...,wN".

inline void write_chain_csv(std::ostream& os, const ChainResult& chain)
{
    const std::size_t n = chain.final_state.resolution();
    os << "# seed=" << chain.seed << '\n' << "k,bias";
    for (std::size_t i = 1; i <= n; ++i) {
        os << ",w" << i;
    }
    os << '\n';
    for (const auto& cp : chain.checkpoints) {
        os << cp.k << ',' << format_number(cp.state.bias);
        for (double v : cp.state.w.values()) {
            os << ',' << format_number(v);
        }
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// ErrorTable: "#"-prefixed metadata lines, then "method,N,k,mean_sq_error".

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline constexpr std::string_view kErrorTableHeader = "method,N,k,mean_sq_error";

inline void write_error_tables_csv(std::ostream& os, const std::vector<ErrorTable>& tables,
                                   const Metadata& metadata)
{
    for (const auto& [key, value] : metadata) {
        os << "# " << key << '=' << value << '\n';
    }
    os << kErrorTableHeader << '\n';
    for (const auto& t : tables) {
        for (const auto& row : t.rows) {
            os << to_string(t.method) << ',' << t.resolution << ',' << row.k << ','
               << format_number(row.mean_sq_error) << '\n';
        }
    }
}

struct ParsedErrorTables {
    Metadata metadata;
    std::vector<ErrorTable> tables; // grouped by (method, N) in order of first appearance
};

inline ParsedErrorTables read_error_tables_csv(std::istream& is)
{
    ParsedErrorTables out;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    std::map<std::pair<int, std::size_t>, std::size_t> index;
    while (std::getline(is, line)) {
        ++lineno;
        const auto sv = strip_cr(line);
        if (sv.empty()) {
            continue;
        }
        if (!header_seen && sv.front() == '#') {
            auto body = sv.substr(1);
            while (!body.empty() && body.front() == ' ') {
                body.remove_prefix(1);
            }
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) {
                out.metadata.emplace_back(std::string(body), "");
            } else {
                out.metadata.emplace_back(std::string(body.substr(0, eq)),
                                          std::string(body.substr(eq + 1)));
            }
            continue;
        }
        if (!header_seen) {
            if (sv != kErrorTableHeader) {
                throw ParseError(lineno, "expected header '" + std::string(kErrorTableHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto f = split_csv(sv);
        if (f.size() != 4) {
            throw ParseError(lineno, "expected 4 fields, got " + std::to_string(f.size()));
        }
        Method method;
        try {
            method = parse_method(f[0]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(lineno, e.what());
        }
        const auto resolution = parse_integer<std::size_t>(f[1], lineno);
        const auto k = parse_integer<std::uint64_t>(f[2], lineno);
        const double err = parse_number(f[3], lineno);
        if (std::isnan(err) || err < 0.0) {
            throw ParseError(lineno, "mean_sq_error must be non-negative");
        }
        const auto key = std::make_pair(static_cast<int>(method), resolution);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, out.tables.size()).first;
            ErrorTable t;
            t.method = method;
            t.resolution = resolution;
            out.tables.push_back(std::move(t));
        }
        auto& rows = out.tables[it->second].rows;
        if (!rows.empty() && rows.back().k >= k) {
            throw ParseError(lineno, "checkpoints must be strictly increasing within a group");
        }
        rows.push_back({k, err});
    }
    if (!header_seen) {
        throw ParseError(lineno + 1, "missing header");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Verification report: "check,trials,failures,worst_margin".

struct CheckSummary {
    std::string name;
    std::uint64_t trials = 0;
    std::uint64_t failures = 0;
    double worst_margin = std::numeric_limits<double>::infinity();

    void record(bool passed, double margin)
    {
        ++trials;
        if (!passed) {
            ++failures;
        }
        worst_margin = std::min(worst_margin, margin);
    }
    bool passed() const noexcept { return failures == 0; }
};

inline void write_check_report_csv(std::ostream& os, const std::vector<CheckSummary>& checks)
{
    os << "check,trials,failures,worst_margin\n";
    for (const auto& c : checks) {
        os << c.name << ',' << c.trials << ',' << c.failures << ',' << format_number(c.worst_margin)
           << '\n';
    }
}

// ---------------------------------------------------------------------------
// Log-log SVG plot: one polyline per table plus a dashed 1/k guide.

inline void write_error_plot_svg(std::ostream& os, const std::vector<ErrorTable>& tables,
                                 const std::string& title)
{
    constexpr double width = 640, height = 480;
    constexpr double left = 70, right = 150, top = 40, bottom = 50;
    double kmin = std::numeric_limits<double>::infinity(), kmax = 0;
    double emin = std::numeric_limits<double>::infinity(), emax = 0;
    for (const auto& t : tables) {
        for (const auto& r : t.rows) {
            if (r.mean_sq_error > 0 && std::isfinite(r.mean_sq_error) && r.k > 0) {
                kmin = std::min(kmin, static_cast<double>(r.k));
                kmax = std::max(kmax, static_cast<double>(r.k));
                emin = std::min(emin, r.mean_sq_error);
                emax = std::max(emax, r.mean_sq_error);
            }
        }
    }
    const bool empty = !(kmax > 0);
    if (empty) {
        kmin = 1, kmax = 10, emin = 1, emax = 10;
    }
    // Guide line C/k anchored above the largest error at the first checkpoint.
    const double guide_c = emax * kmin * 2.0;
    emax = std::max(emax, guide_c / kmin);
    emin = std::min(emin, guide_c / kmax);
    const double lx0 = std::floor(std::log10(kmin)), lx1 = std::ceil(std::log10(kmax));
    const double ly0 = std::floor(std::log10(emin)), ly1 = std::ceil(std::log10(emax));
    const double sx = lx1 > lx0 ? lx1 - lx0 : 1.0;
    const double sy = ly1 > ly0 ? ly1 - ly0 : 1.0;
    auto px = [&](double k) { return left + (std::log10(k) - lx0) / sx * (width - left - right); };
    auto py = [&](double e) { return top + (ly1 - std::log10(e)) / sy * (height - top - bottom); };
    auto fmt = [](double v) {
        std::ostringstream s;
        s.precision(6);
        s << v;
        return s.str();
    };

    static constexpr const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                             "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                             "#bcbd22", "#17becf", "#393b79", "#637939"};
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"15\">"
       << title << "</text>\n";
    os << "<g stroke=\"#ddd\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (double d = lx0; d <= lx1; d += 1.0) {
        const double x = px(std::pow(10.0, d));
        os << "<line x1=\"" << fmt(x) << "\" y1=\"" << top << "\" x2=\"" << fmt(x) << "\" y2=\""
           << height - bottom << "\"/>"
           << "<text stroke=\"none\" x=\"" << fmt(x) << "\" y=\"" << height - bottom + 16
           << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
    }
    for (double d = ly0; d <= ly1; d += 1.0) {
        const double y = py(std::pow(10.0, d));
        os << "<line x1=\"" << left << "\" y1=\"" << fmt(y) << "\" x2=\"" << width - right
           << "\" y2=\"" << fmt(y) << "\"/>"
           << "<text stroke=\"none\" x=\"" << left - 6 << "\" y=\"" << fmt(y + 4)
           << "\" text-anchor=\"end\">1e" << d << "</text>\n";
    }
    os << "</g>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right
       << "\" height=\"" << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">k</text>\n";
    os << "<text x=\"16\" y=\"" << (top + height - bottom) / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 "
       << (top + height - bottom) / 2 << ")\">mean squared error</text>\n";

    os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\" "
          "points=\""
       << fmt(px(kmin)) << ',' << fmt(py(guide_c / kmin)) << ' ' << fmt(px(kmax)) << ','
       << fmt(py(guide_c / kmax)) << "\"/>\n";

    std::size_t series = 0;
    for (const auto& t : tables) {
        const char* color = colors[series % std::size(colors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (const auto& r : t.rows) {
            if (!(r.mean_sq_error > 0) || !std::isfinite(r.mean_sq_error) || r.k == 0) {
                continue;
            }
            os << (first ? "" : " ") << fmt(px(static_cast<double>(r.k))) << ','
               << fmt(py(r.mean_sq_error));
            first = false;
        }
        os << "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(series) + 10.0;
        os << "<line x1=\"" << width - right + 10 << "\" y1=\"" << ly << "\" x2=\""
           << width - right + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>"
           << "<text x=\"" << width - right + 40 << "\" y=\"" << ly + 4
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << to_string(t.method)
           << " N=" << t.resolution << "</text>\n";
        ++series;
    }
    const double ly = top + 16.0 * static_cast<double>(series) + 10.0;
    os << "<line x1=\"" << width - right + 10 << "\" y1=\"" << ly << "\" x2=\"" << width - right + 34
       << "\" y2=\"" << ly << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>"
       << "<text x=\"" << width - right + 40 << "\" y=\"" << ly + 4
       << "\" font-family=\"sans-serif\" font-size=\"11\">C/k</text>\n";
    os << "</svg>\n";
}

} // namespace spi

#endif
