#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "cqnls/grid.hpp"

namespace cqnls {

/// Shortest round-trip decimal form of a double.
inline std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Write text to path via a temporary sibling and rename.
inline void write_atomic(const std::string& path, const std::string& text) {
    namespace fs = std::filesystem;
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw ConfigError("cannot open '" + tmp + "' for writing");
        os << text;
        if (!os) throw ConfigError("write failed for '" + tmp + "'");
    }
    fs::rename(tmp, p);
}

using Metadata = std::map<std::string, std::string>;

/**
 * Field file: '#'-comment lines with key=value metadata, then rows r,re,im.
 * The grid keys (a, n_points, r_max, grading) are always written.
 */
inline std::string format_field(const RadialField& f, double a, const Metadata& extra = {}) {
    std::ostringstream os;
    os << "# a=" << fmt_double(a) << "\n";
    os << "# n_points=" << f.grid->n_points << "\n";
    os << "# r_max=" << fmt_double(f.grid->r_max) << "\n";
    os << "# grading=" << to_string(f.grid->grading) << "\n";
    for (auto& [k, v] : extra) os << "# " << k << "=" << v << "\n";
    for (int i = 0; i < f.size(); ++i)
        os << fmt_double(f.grid->nodes[i]) << "," << fmt_double(f[i].real()) << "," << fmt_double(f[i].imag()) << "\n";
    return os.str();
}

inline void write_field(const std::string& path, const RadialField& f, double a, const Metadata& extra = {}) {
    write_atomic(path, format_field(f, a, extra));
}

struct FieldFile {
    Metadata meta;
    RadialField field;
    double a = 0.0;
};

inline FieldFile read_field(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open field file '" + path + "'");
    FieldFile out;
    std::vector<double> rs;
    std::vector<cplx> vals;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto body = line.substr(1);
            auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            out.meta[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
            continue;
        }
        if (line.rfind("r,", 0) == 0) continue;  // optional column header
        std::istringstream ls(line);
        double r, re, im;
        char c1, c2;
        if (!(ls >> r >> c1 >> re >> c2 >> im) || c1 != ',' || c2 != ',')
            throw DataError("malformed field row: '" + line + "'");
        rs.push_back(r);
        vals.emplace_back(re, im);
    }
    for (const char* key : {"n_points", "r_max", "grading"})
        if (!out.meta.count(key)) throw DataError(std::string("field file lacks '") + key + "'");
    const int n = std::stoi(out.meta["n_points"]);
    auto g = build_grid(n, std::stod(out.meta["r_max"]), parse_grading(out.meta["grading"]));
    if (static_cast<int>(vals.size()) != n) throw DataError("field file row count does not match n_points");
    for (int i = 0; i < n; ++i)
        if (std::abs(rs[i] - g->nodes[i]) > 1e-12 * g->r_max) throw DataError("field file nodes do not match grid");
    out.a = out.meta.count("a") ? std::stod(out.meta["a"]) : 0.0;
    out.field = RadialField(g, std::move(vals));
    return out;
}

}  // namespace cqnls
