#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "cqnls/threshold.hpp"

namespace cqnls {

struct OverlayPoint {
    double m = 0.0;
    double e = 0.0;
    std::string label;
};

struct PlaneFigure {
    double a = 0.0;
    double m_max = 0.0;  ///< 1.1 M(Q_1)
    double e_max = 0.0;  ///< 1.1 max e over the plotted samples
    std::vector<OverlayPoint> overlays;
    std::string svg;
};

namespace detail {

inline std::string num(double x, const char* f = "%.2f") {
    char buf[48];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '&': o += "&amp;"; break;
            case '"': o += "&quot;"; break;
            default: o += c;
        }
    }
    return o;
}

}  // namespace detail

/**
 * Static SVG of the (mass, energy) plane. K_a is shaded: the full strip below
 * M(S_a), then the area under the sampled threshold curve up to M(Q_1).
 * Only fixed-precision formatting is used, so equal inputs give equal bytes.
 */
inline PlaneFigure emit_plane(double a, const ThresholdCurve& c, const std::vector<OverlayPoint>& overlays = {}) {
    if (c.samples.empty()) throw ConfigError("emit_plane: empty threshold curve");
    if (a != c.a) throw StructuralError("emit_plane: curve built for a=" + fmt_double(c.a));
    PlaneFigure p;
    p.a = a;
    p.overlays = overlays;
    p.m_max = 1.1 * c.mass_q;
    double emax = 0.0;
    for (auto& s : c.samples)
        if (s.m <= p.m_max) emax = std::max(emax, s.e);
    p.e_max = 1.1 * (emax > 0 ? emax : 1.0);

    const double W = 640, H = 480, L = 72, R = 24, T = 40, B = 56;
    const double pw = W - L - R, ph = H - T - B;
    auto X = [&](double m) { return L + pw * std::clamp(m / p.m_max, 0.0, 1.0); };
    auto Y = [&](double e) { return T + ph * (1.0 - std::clamp(e / p.e_max, 0.0, 1.0)); };
    using detail::num;
    auto pt = [&](double m, double e) { return num(X(m)) + "," + num(Y(e)); };

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W, "%.0f") + "\" height=\"" + num(H, "%.0f") +
         "\" viewBox=\"0 0 " + num(W, "%.0f") + " " + num(H, "%.0f") + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + num(W, "%.0f") + "\" height=\"" + num(H, "%.0f") + "\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">Mass/Energy plane, a = " +
         fmt_double(a) + "</text>\n";

    // K_a
    std::string poly = pt(0, 0) + " " + pt(0, p.e_max) + " " + pt(c.mass_s, p.e_max);
    for (auto& smp : c.samples)
        if (smp.m >= c.mass_s && smp.m <= c.mass_q) poly += " " + pt(smp.m, std::max(smp.e, 0.0));
    poly += " " + pt(c.mass_q, 0);
    s += "<polygon id=\"K_a\" points=\"" + poly + "\" fill=\"#9ecae1\" fill-opacity=\"0.6\" stroke=\"none\"/>\n";

    // threshold curve, clipped to the upper half plane
    std::string line;
    for (auto& smp : c.samples) {
        if (smp.m > p.m_max || smp.e < 0) continue;
        line += (line.empty() ? "" : " ") + pt(smp.m, smp.e);
    }
    s += "<polyline id=\"threshold\" points=\"" + line + "\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\"/>\n";

    // axes and ticks
    s += "<line x1=\"" + num(L) + "\" y1=\"" + num(T + ph) + "\" x2=\"" + num(L + pw) + "\" y2=\"" + num(T + ph) +
         "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(L) + "\" y1=\"" + num(T) + "\" x2=\"" + num(L) + "\" y2=\"" + num(T + ph) + "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double m = p.m_max * k / 5, e = p.e_max * k / 5;
        s += "<line x1=\"" + num(X(m)) + "\" y1=\"" + num(T + ph) + "\" x2=\"" + num(X(m)) + "\" y2=\"" + num(T + ph + 5) +
             "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + num(X(m)) + "\" y=\"" + num(T + ph + 19) + "\" text-anchor=\"middle\">" + num(m, "%.4g") + "</text>\n";
        s += "<line x1=\"" + num(L - 5) + "\" y1=\"" + num(Y(e)) + "\" x2=\"" + num(L) + "\" y2=\"" + num(Y(e)) +
             "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + num(L - 8) + "\" y=\"" + num(Y(e) + 4) + "\" text-anchor=\"end\">" + num(e, "%.4g") + "</text>\n";
    }
    s += "<text x=\"" + num(L + pw / 2) + "\" y=\"" + num(H - 12) + "\" text-anchor=\"middle\">mass M(u)</text>\n";
    s += "<text x=\"16\" y=\"" + num(T + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + num(T + ph / 2) +
         ")\">energy E(u)</text>\n";

    // mass markers
    for (auto [m, label] : {std::pair{c.mass_s, "M(S_a)"}, std::pair{c.mass_q, "M(Q_1)"}}) {
        s += "<line class=\"marker\" x1=\"" + num(X(m)) + "\" y1=\"" + num(T) + "\" x2=\"" + num(X(m)) + "\" y2=\"" + num(T + ph) +
             "\" stroke=\"#636363\" stroke-dasharray=\"4 3\"/>\n";
        s += "<text x=\"" + num(X(m) + 3) + "\" y=\"" + num(T + 12) + "\">" + label + " = " + num(m, "%.5g") + "</text>\n";
    }

    for (auto& o : overlays) {
        if (o.m < 0 || o.m > p.m_max || o.e < 0 || o.e > p.e_max) continue;
        s += "<circle class=\"overlay\" cx=\"" + num(X(o.m)) + "\" cy=\"" + num(Y(o.e)) +
             "\" r=\"2.5\" fill=\"#d94801\"><title>" + detail::xml_escape(o.label) + "</title></circle>\n";
    }
    s += "</svg>\n";
    p.svg = std::move(s);
    return p;
}

}  // namespace cqnls
