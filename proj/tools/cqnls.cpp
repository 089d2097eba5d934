// cqnls: command-line driver for the radial cubic-quintic NLS toolkit.
//
// Every run writes a JSON manifest (command, parameters, grid, version,
// duration, outputs, assertion summary) next to its main output.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cqnls/plane.hpp"
#include "cqnls/verify.hpp"

using json = nlohmann::ordered_json;
using namespace cqnls;

namespace {

constexpr const char* tool_version = "0.1.0";

struct Common {
    std::vector<double> grid = {2048, 40};
    std::string grading = "uniform";
    std::uint64_t seed = 0;
    std::string manifest;
};

struct Outcome {
    std::vector<std::string> outputs;
    CheckList asserts;
    std::string grid_fingerprint;
    std::vector<std::string> notes;
};

GridPtr make_grid(const Common& c) {
    if (c.grid.size() != 2 || c.grid[0] != std::floor(c.grid[0]))
        throw ConfigError("--grid expects n,r_max with integer n");
    return build_grid(static_cast<int>(c.grid[0]), c.grid[1], parse_grading(c.grading));
}

void emit(const std::string& path, const std::string& text, Outcome& out) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    write_atomic(path, text);
    out.outputs.push_back(path);
}

std::string row(std::initializer_list<std::string> cols) {
    std::string s;
    for (auto& c : cols) s += (s.empty() ? "" : ",") + c;
    return s + "\n";
}

ThresholdCurve build_curve(double a, GridPtr g, int samples) {
    CurveOptions o;
    o.grid = g;
    o.samples = samples;
    return build_threshold_curve(a, trace_branch(a, default_omega_grid(64)), o);
}

ThresholdCurve load_curve(const std::string& path, double a) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open curve file '" + path + "'");
    return read_curve_csv(is, a);
}

json checks_json(const CheckList& l) {
    json arr = json::array();
    for (auto& c : l.checks) {
        json j;
        j["name"] = c.name;
        j["value"] = c.value;
        j["relation"] = c.relation;
        j["bound"] = c.bound;
        j["pass"] = c.pass;
        if (!c.detail.empty()) j["detail"] = c.detail;
        arr.push_back(j);
    }
    return arr;
}

// ---------------------------------------------------------------------------
// subcommands

struct GroundStateArgs {
    double a = 0.0;
    std::optional<double> omega, alpha;
    std::string out;
};

void run_ground_state(const GroundStateArgs& p, const Common& c, Outcome& out) {
    if (p.omega.has_value() == p.alpha.has_value()) throw ConfigError("ground-state needs exactly one of --omega, --alpha");
    auto g = make_grid(c);
    out.grid_fingerprint = g->fingerprint();
    auto q = p.omega ? shoot(p.a, *p.omega, g) : select_omega_for_alpha(p.a, *p.alpha, g);
    out.asserts.le("first Pohozaev residual", std::abs(q.pohozaev_1), 1e-6);
    out.asserts.le("second Pohozaev residual", std::abs(q.pohozaev_2), 1e-6);
    out.asserts.le("l4 = 4 omega M", std::abs(q.l4_identity), 1e-5);

    Metadata meta;
    meta["omega"] = fmt_double(q.omega);
    if (q.alpha) {
        meta["alpha"] = fmt_double(*q.alpha);
        meta["tight_window"] = q.tight_window ? "true" : "false";
    }
    meta["amplitude"] = fmt_double(q.amplitude);
    meta["pohozaev_1"] = fmt_double(q.pohozaev_1);
    meta["pohozaev_2"] = fmt_double(q.pohozaev_2);
    meta["l4_identity"] = fmt_double(q.l4_identity);
    meta["discrete_residual"] = fmt_double(q.discrete_residual);
    meta["report_columns"] = report_csv_header();
    meta["report"] = report_csv_row(q.report);
    meta["grid_report"] = report_csv_row(q.grid_report);
    if (!p.out.empty()) {
        write_field(p.out, q.profile, p.a, meta);
        out.outputs.push_back(p.out);
    }
    std::cout << "# a=" << fmt_double(p.a) << "\n";
    for (auto& [k, v] : meta)
        if (k != "report" && k != "report_columns" && k != "grid_report") std::cout << "# " << k << "=" << v << "\n";
    std::cout << report_csv_header() << "\n" << report_csv_row(q.report) << "\n";
}

struct SharpArgs {
    double a = 0.0;
    double alpha = 1.0;
    std::string method = "closed-form";
    int starts = 10;
    std::string out;
};

void run_sharp(const SharpArgs& p, const Common& c, Outcome& out) {
    auto g = make_grid(c);
    out.grid_fingerprint = g->fingerprint();
    JFlowOptions jo;
    jo.starts = p.starts;
    jo.seed = c.seed;
    std::vector<SharpConstant> res;
    if (p.method == "closed-form" || p.method == "both") res.push_back(sharp_constant(p.a, p.alpha, SharpMethod::closed_form, g, jo));
    if (p.method == "direct" || p.method == "both") res.push_back(sharp_constant(p.a, p.alpha, SharpMethod::direct, g, jo));
    if (res.empty()) throw ConfigError("unknown --method '" + p.method + "' (closed-form, direct, both)");
    if (res.size() == 2) out.asserts.le("closed form vs direct", rel_diff(res[1].value, res[0].value), 1e-3);

    std::string s = "a,alpha,method,value,delegated,omega,best_start\n";
    for (auto& r : res)
        s += row({fmt_double(p.a), fmt_double(r.alpha), to_string(r.method), fmt_double(r.value), r.delegated ? "true" : "false",
                  fmt_double(r.omega), std::to_string(r.best_start)});
    emit(p.out, s, out);
}

struct BranchArgs {
    double a = 0.0;
    double omega_min = 1e-3, omega_max = 0.18;
    int count = 64;
    std::string out;
};

void run_branch(const BranchArgs& p, const Common&, Outcome& out) {
    if (p.count < 1) throw ConfigError("--count must be positive");
    if (!(p.omega_min > 0 && p.omega_max >= p.omega_min)) throw ConfigError("need 0 < --omega-min <= --omega-max");
    auto b = trace_branch(p.a, p.count == 1 ? std::vector<double>{p.omega_min} : log_spaced(p.omega_min, p.omega_max, p.count));
    out.grid_fingerprint = "continuum";
    std::string s = "omega,mass,energy,virial,h1a_sq,l4_4,l6_6\n";
    double worst = 0;
    for (auto& q : b.points) {
        s += row({fmt_double(q.omega), fmt_double(q.mass), fmt_double(q.energy), fmt_double(q.virial), fmt_double(q.h1a_sq),
                  fmt_double(q.l4_4), fmt_double(q.l6_6)});
        worst = std::max(worst, std::abs(q.virial) / q.h1a_sq);
    }
    for (auto& f : b.failures) out.notes.push_back("omega=" + fmt_double(f.omega) + ": " + f.reason);
    for (auto& n : out.notes) std::cerr << "branch failure at " << n << "\n";
    if (b.points.empty()) throw SolverError("no branch point could be computed");
    out.asserts.le("max |V|/h1a_sq on branch", worst, 1e-5);
    emit(p.out, s, out);
}

struct ThresholdArgs {
    double a = 0.0;
    int samples = 64;
    std::string out;
};

void run_threshold(const ThresholdArgs& p, const Common& c, Outcome& out) {
    auto g = make_grid(c);
    out.grid_fingerprint = g->fingerprint();
    auto curve = build_curve(p.a, g, p.samples);
    out.asserts.truth("threshold curve without flags", curve.flags.empty());
    for (auto& f : curve.flags) {
        out.notes.push_back(f);
        std::cerr << "flag: " << f << "\n";
    }
    emit(p.out, "# a=" + fmt_double(p.a) + "\n# mass_s=" + fmt_double(curve.mass_s) + "\n# mass_q=" + fmt_double(curve.mass_q) +
                    "\n# omega_1=" + fmt_double(curve.omega_1) + "\n" + curve_csv(curve),
         out);
}

struct PlaneArgs {
    double a = 0.0;
    std::string curve;
    std::string overlay;
    bool overlay_branch = false;
    int samples = 64;
    std::string out = "plane.svg";
};

std::vector<OverlayPoint> read_overlay(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open overlay file '" + path + "'");
    std::vector<OverlayPoint> pts;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("m,", 0) == 0) continue;
        std::stringstream ss(line);
        std::string m, e, label;
        std::getline(ss, m, ',');
        std::getline(ss, e, ',');
        std::getline(ss, label);
        try {
            pts.push_back({std::stod(m), std::stod(e), label});
        } catch (const std::logic_error&) {
            throw DataError("malformed overlay row: '" + line + "'");
        }
    }
    return pts;
}

void run_plane(const PlaneArgs& p, const Common& c, Outcome& out) {
    ThresholdCurve curve;
    if (!p.curve.empty()) {
        curve = load_curve(p.curve, p.a);
        out.grid_fingerprint = "from " + p.curve;
    } else {
        auto g = make_grid(c);
        out.grid_fingerprint = g->fingerprint();
        curve = build_curve(p.a, g, p.samples);
    }
    std::vector<OverlayPoint> ov;
    if (!p.overlay.empty()) ov = read_overlay(p.overlay);
    if (p.overlay_branch) {
        auto pts = curve.branch.empty() ? trace_branch(p.a, default_omega_grid(64)).points : curve.branch;
        for (auto& q : pts) ov.push_back({q.mass, q.energy, "omega=" + fmt_double(q.omega)});
    }
    auto fig = emit_plane(p.a, curve, ov);
    emit(p.out, fig.svg, out);
}

struct EvolveArgs {
    EvolutionConfig cfg;
    std::string init = "gaussian:0.5";
    std::string out;
    std::string final_state;
};

void run_evolve(const EvolveArgs& p, const Common& c, Outcome& out) {
    RadialField u0;
    GridPtr g;
    if (std::filesystem::is_regular_file(p.init)) {
        auto ff = read_field(p.init);
        u0 = ff.field;
        g = u0.grid;
    } else {
        g = make_grid(c);
        u0 = make_initial(p.init, p.cfg.a, g);
    }
    out.grid_fingerprint = g->fingerprint();
    auto write_trace = [&](const EvolutionTrace& tr) {
        if (!p.out.empty()) {
            write_atomic(p.out, trace_csv(tr));
            out.outputs.push_back(p.out);
        }
    };
    EvolutionTrace tr;
    try {
        tr = evolve(p.cfg, u0);
    } catch (const InstabilityError& e) {
        if (e.partial) write_trace(*e.partial);
        throw;
    }
    write_trace(tr);
    if (!p.final_state.empty()) {
        write_field(p.final_state, tr.final_state, p.cfg.a, {{"t", fmt_double(p.cfg.t_end)}});
        out.outputs.push_back(p.final_state);
    }
    out.asserts.truth("mass and energy drift within budget", tr.violations.empty(),
                      tr.violations.empty() ? "" : tr.violations.front());
    auto d = scattering_diagnostics(tr);
    std::cout << "max_mass_drift=" << fmt_double(tr.max_mass_drift) << "\n"
              << "max_energy_drift=" << fmt_double(tr.max_energy_drift) << "\n"
              << "min_virial=" << fmt_double(tr.min_virial) << "\n"
              << "boundary_polluted=" << (tr.boundary_polluted ? "true" : "false") << "\n"
              << "verdict=" << to_string(d.verdict) << "\n"
              << "reason=" << d.reason << "\n";
    if (p.out.empty()) std::cout << trace_csv(tr);
}

struct VerifyArgs {
    std::string suite = "all";
    std::string out;
};

void run_verify(const VerifyArgs& p, const Common& c, Outcome& out) {
    auto g = make_grid(c);
    out.grid_fingerprint = g->fingerprint();
    VerifyContext ctx(g, c.seed);
    auto lists = run_suite(p.suite, ctx);
    json rep;
    rep["suite"] = p.suite;
    rep["grid"] = g->fingerprint();
    rep["seed"] = c.seed;
    bool ok = true;
    json groups = json::array();
    for (auto& l : lists) {
        ok = ok && l.pass();
        json j;
        j["name"] = l.name;
        j["pass"] = l.pass();
        j["checks"] = checks_json(l);
        groups.push_back(j);
        for (auto& ch : l.checks) out.asserts.checks.push_back({l.name + ": " + ch.name, ch.value, ch.bound, ch.relation, ch.pass, ch.detail});
        char secs[32];
        std::snprintf(secs, sizeof secs, "%.1f", l.seconds);
        out.notes.push_back(l.name + " " + (l.pass() ? "pass" : "FAIL") + " in " + secs + " s");
        std::cerr << l.name << ": " << (l.pass() ? "pass" : "FAIL") << "\n";
    }
    rep["pass"] = ok;
    rep["groups"] = groups;
    emit(p.out, rep.dump(2) + "\n", out);
}

struct ReportArgs {
    std::string in;
    std::string curve;
    std::string out;
};

void run_report(const ReportArgs& p, const Common&, Outcome& out) {
    auto ff = read_field(p.in);
    out.grid_fingerprint = ff.field.grid->fingerprint();
    auto r = report(build_operator(ff.a, ff.field.grid), ff.field);
    std::string s = "# a=" + fmt_double(ff.a) + "\n# source=" + p.in + "\n# grid=" + ff.field.grid->fingerprint() + "\n";
    if (!p.curve.empty()) {
        auto c = load_curve(p.curve, ff.a);
        auto q = classify(c, r.mass, r.energy);
        s += "# region=" + to_string(q.verdict) + "\n# threshold=" + fmt_double(q.threshold) + "\n# F=" +
             fmt_double(f_functional(r, ff.a, c)) + "\n";
    }
    s += std::string("# columns=") + report_csv_header() + "\n" + report_csv_row(r) + "\n";
    emit(p.out, s, out);
}

// ---------------------------------------------------------------------------
// manifest

json parameters(const CLI::App& app, const CLI::App* sub) {
    json params = json::object();
    auto add = [&](const CLI::App& a, const std::string& prefix) {
        for (const CLI::Option* o : a.get_options()) {
            if (o->get_lnames().empty()) continue;
            const std::string name = o->get_lnames().front();
            if (name == "help" || name == "config" || name == "version") continue;
            std::string v;
            if (o->count() > 0) {
                for (auto& r : o->results()) v += (v.empty() ? "" : ",") + r;
                if (o->get_type_size() == 0 && v.empty()) v = "true";
            } else {
                v = o->get_default_str();
                if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
                if (o->get_type_size() == 0 && v.empty()) v = "false";
            }
            params[prefix + name] = v;
        }
    };
    add(app, "");
    if (sub) add(*sub, sub->get_name() + ".");
    return params;
}

std::string manifest_path(const Common& c, const Outcome& out) {
    if (!c.manifest.empty()) return c.manifest;
    if (!out.outputs.empty()) return out.outputs.front() + ".manifest.json";
    return "cqnls_manifest.json";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radial cubic-quintic NLS with inverse-square potential: ground states, thresholds, dynamics"};
    app.set_version_flag("--version", tool_version);
    app.set_config("--config", "", "flat key=value configuration file");
    app.require_subcommand(1);
    app.fallthrough();

    Common common;
    app.add_option("--grid", common.grid, "grid as n,r_max")->delimiter(',')->expected(2)->capture_default_str();
    app.add_option("--grading", common.grading, "uniform or graded")->capture_default_str();
    app.add_option("--seed", common.seed, "64-bit seed for all randomness")->capture_default_str();
    app.add_option("--manifest", common.manifest, "manifest path (default: <first output>.manifest.json)");

    GroundStateArgs gs;
    auto* c_gs = app.add_subcommand("ground-state", "shoot a ground state for a frequency or a GN exponent");
    c_gs->add_option("--a", gs.a, "coupling")->capture_default_str();
    auto* o_omega = c_gs->add_option("--omega", gs.omega, "frequency in (0, 3/16)");
    c_gs->add_option("--alpha", gs.alpha, "select omega with l6/K = alpha")->excludes(o_omega);
    c_gs->add_option("--out", gs.out, "field file");

    SharpArgs sh;
    auto* c_sh = app.add_subcommand("sharp-constant", "sharp Gagliardo-Nirenberg constant");
    c_sh->add_option("--a", sh.a, "coupling")->capture_default_str();
    c_sh->add_option("--alpha", sh.alpha, "exponent")->capture_default_str();
    c_sh->add_option("--method", sh.method, "closed-form, direct or both")
        ->check(CLI::IsMember({"closed-form", "direct", "both"}))
        ->capture_default_str();
    c_sh->add_option("--starts", sh.starts, "random starts for direct minimization")->capture_default_str();
    c_sh->add_option("--out", sh.out, "CSV output (default stdout)");

    BranchArgs br;
    auto* c_br = app.add_subcommand("branch", "trace the soliton branch over log-spaced frequencies");
    c_br->add_option("--a", br.a, "coupling")->capture_default_str();
    c_br->add_option("--omega-min", br.omega_min)->capture_default_str();
    c_br->add_option("--omega-max", br.omega_max)->capture_default_str();
    c_br->add_option("--count", br.count)->capture_default_str();
    c_br->add_option("--out", br.out, "CSV output (default stdout)");

    ThresholdArgs th;
    auto* c_th = app.add_subcommand("threshold", "threshold curve E_a(m)");
    c_th->add_option("--a", th.a, "coupling")->capture_default_str();
    c_th->add_option("--samples", th.samples, "samples on [M(S), M(Q)]")->capture_default_str();
    c_th->add_option("--out", th.out, "CSV output (default stdout)");

    PlaneArgs pl;
    auto* c_pl = app.add_subcommand("plane", "SVG of the mass-energy plane");
    c_pl->add_option("--a", pl.a, "coupling")->capture_default_str();
    c_pl->add_option("--curve", pl.curve, "reuse a curve CSV written by 'threshold'");
    c_pl->add_option("--overlay", pl.overlay, "CSV of m,e[,label] points");
    c_pl->add_flag("--overlay-branch", pl.overlay_branch, "plot soliton branch points");
    c_pl->add_option("--samples", pl.samples)->capture_default_str();
    c_pl->add_option("--out", pl.out, "SVG output")->capture_default_str();

    EvolveArgs ev;
    std::string mode = "cubic-quintic";
    auto* c_ev = app.add_subcommand("evolve", "Strang-split time evolution with virial monitor");
    c_ev->add_option("--a", ev.cfg.a, "coupling")->capture_default_str();
    c_ev->add_option("--init", ev.init, "preset (gaussian:A[,w], soliton:omega, soliton-perturbed:omega,eps) or field file")
        ->capture_default_str();
    c_ev->add_option("--dt", ev.cfg.dt)->capture_default_str();
    c_ev->add_option("--t-end", ev.cfg.t_end)->capture_default_str();
    c_ev->add_option("--virial-R", ev.cfg.virial_R)->capture_default_str();
    c_ev->add_option("--mode", mode, "cubic-quintic, quintic-only, linear-only")->capture_default_str();
    c_ev->add_option("--checkpoint-every", ev.cfg.checkpoint_every)->capture_default_str();
    c_ev->add_option("--gap-start", ev.cfg.gap_start_fraction, "scatter gap reference as a fraction of t_end")
        ->capture_default_str();
    c_ev->add_option("--out", ev.out, "trace CSV (default stdout)");
    c_ev->add_option("--final", ev.final_state, "write the final state as a field file");

    VerifyArgs vf;
    auto* c_vf = app.add_subcommand("verify", "run an invariant suite");
    c_vf->add_option("--suite", vf.suite, "hardy, scaling, pohozaev, sharp-constant, threshold, conservation, virial, all")
        ->capture_default_str();
    c_vf->add_option("--out", vf.out, "JSON report (default stdout)");

    ReportArgs rp;
    auto* c_rp = app.add_subcommand("report", "functionals of a field file");
    c_rp->add_option("--in", rp.in, "field file")->required();
    c_rp->add_option("--curve", rp.curve, "threshold curve CSV for region and F");
    c_rp->add_option("--out", rp.out, "output (default stdout)");

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
        return static_cast<int>(ExitCode::usage);
    }

    const CLI::App* sub = app.get_subcommands().front();
    Outcome out;
    int code = 0;
    std::string error;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const std::string name = sub->get_name();
        if (name == "ground-state") run_ground_state(gs, common, out);
        else if (name == "sharp-constant") run_sharp(sh, common, out);
        else if (name == "branch") run_branch(br, common, out);
        else if (name == "threshold") run_threshold(th, common, out);
        else if (name == "plane") run_plane(pl, common, out);
        else if (name == "evolve") {
            ev.cfg.mode = parse_mode(mode);
            run_evolve(ev, common, out);
        } else if (name == "verify") run_verify(vf, common, out);
        else run_report(rp, common, out);
        if (out.asserts.failures() > 0) code = static_cast<int>(ExitCode::assertion);
    } catch (const Error& e) {
        code = static_cast<int>(e.code());
        error = e.what();
    } catch (const std::filesystem::filesystem_error& e) {
        code = static_cast<int>(ExitCode::usage);
        error = e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (auto& c : out.asserts.checks)
        if (!c.pass) std::cerr << "assertion failed: " << c.name << " (" << fmt_double(c.value) << " " << c.relation << " " << fmt_double(c.bound) << ")\n";
    if (!error.empty()) std::cerr << "error: " << error << "\n";

    json m;
    m["command"] = sub->get_name();
    m["parameters"] = parameters(app, sub);
    m["grid"] = out.grid_fingerprint;
    m["version"] = tool_version;
    m["duration_s"] = seconds;
    m["outputs"] = out.outputs;
    json as;
    as["total"] = out.asserts.checks.size();
    as["failed"] = out.asserts.failures();
    as["checks"] = checks_json(out.asserts);
    m["assertions"] = as;
    if (!out.notes.empty()) m["notes"] = out.notes;
    m["exit_code"] = code;
    if (!error.empty()) m["error"] = error;
    try {
        write_atomic(manifest_path(common, out), m.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "error: manifest not written: " << e.what() << "\n";
        if (code == 0) code = static_cast<int>(ExitCode::usage);
    }
    return code;
}
