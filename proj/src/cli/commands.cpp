#include "ctflow/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/spdlog.h>
#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include "ctflow/cli/format.hpp"
#include "ctflow/euler_poisson.hpp"
#include "ctflow/qs_atlas.hpp"

namespace ctflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxCells = 1'000'000;

std::string format_of(const CommandContext& ctx, const std::string& fallback) {
    const std::string f = ctx.format.empty() ? fallback : ctx.format;
    if (f != "csv" && f != "json") throw ConfigError("format must be csv or json");
    return f;
}

std::ostream& sink(const CommandContext& ctx) { return ctx.out ? *ctx.out : std::cout; }

// Writes `body` to out_dir/name, or to the context stream when no directory is set.
void emit(const CommandContext& ctx, const std::string& name, const std::string& body) {
    if (ctx.out_dir.empty()) {
        sink(ctx) << body;
        return;
    }
    fs::create_directories(ctx.out_dir);
    const fs::path path = fs::path(ctx.out_dir) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    f << body;
    spdlog::info("wrote {}", path.string());
}

json number(double v) { return std::isfinite(v) ? json(rounded(v)) : json(nullptr); }

json numbers(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

double need(const std::optional<double>& v, const std::string& key) {
    if (!v) throw ConfigError("missing required key '" + key + "'");
    return *v;
}

std::vector<double> axis_values(double lo, double hi, std::size_t count) {
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1.0);
    return v;
}

const std::vector<std::string>& axis_names() {
    static const std::vector<std::string> names{"p0", "q0", "s0", "rho0", "y0", "C0"};
    return names;
}

void set_axis(InitialSection& s, const std::string& axis, double v) {
    if (axis == "p0") s.p0 = v;
    else if (axis == "q0") s.q0 = v;
    else if (axis == "s0") s.s0 = v;
    else if (axis == "rho0") s.rho0 = v;
    else if (axis == "y0") s.y0 = v;
    else if (axis == "C0") s.C0 = v;
    else throw ConfigError("unknown sweep axis '" + axis + "'");
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"classify", "sweep", "curves", "simulate", "phase-portrait"};
    return names;
}

RadialFunction density_from_config(const RunConfig& config) {
    const ProfileSection& p = config.profile;
    if (!p.density_file.empty())
        return as_function(RadialProfile::from_csv(p.density_file, ProfileKind::Density, Interpolation::Monotone));
    ProfileSpec spec;
    spec.name = p.density;
    spec.kind = ProfileKind::Density;
    spec.amplitude = p.density_amplitude;
    spec.width = p.density_width;
    spec.radius = p.density_radius;
    spec.exponent = p.density_exponent;
    spec.validate();
    return spec.function();
}

RadialFunction velocity_from_config(const RunConfig& config) {
    const ProfileSection& p = config.profile;
    if (!p.velocity_file.empty())
        return as_function(RadialProfile::from_csv(p.velocity_file, ProfileKind::Velocity, Interpolation::Monotone));
    ProfileSpec spec;
    spec.name = p.velocity;
    spec.kind = ProfileKind::Velocity;
    spec.amplitude = p.velocity_amplitude;
    spec.width = p.velocity_width;
    spec.validate();
    return spec.function();
}

InfluenceSpec influence_from_config(const RunConfig& config) {
    const InfluenceSection& s = config.influence;
    InfluenceSpec phi;
    if (s.name == "constant") phi = constant_influence(s.strength);
    else if (s.name == "inverse-power") phi = inverse_power_influence(s.strength, s.beta);
    else if (s.name == "exponential") phi = exponential_influence(s.strength, s.lambda);
    else throw ConfigError("unknown influence '" + s.name + "'");
    return phi;
}

SimulationConfig simulation_from_config(const RunConfig& config) {
    const SimulateSection& s = config.simulate;
    SimulationConfig sim;
    sim.paths = s.paths;
    sim.radius = s.radius;
    sim.t_end = s.t_end;
    sim.snapshot_every = s.snapshot_every;
    sim.dt = s.dt;
    sim.angular_order = s.angular_order;
    sim.ode = config.integrator;
    return sim;
}

double estimate_flock_diameter(const RadialFunction& rho0, const RadialFunction& u0, const ModelParams& params,
                               const InfluenceSpec& phi, const SimulationConfig& sim) {
    const SimulationResult res = simulate_ea(rho0, u0, params, phi, sim);
    double D = 0.0;
    for (const FieldSnapshot& s : res.snapshots) D = std::max(D, s.support);
    return D;
}

AlignmentBounds bounds_from_config(const RunConfig& config) {
    const BoundsSection& b = config.bounds;
    if (b.psi_min && b.psi_max) {
        AlignmentBounds out;
        out.psi_min = *b.psi_min;
        out.psi_max = *b.psi_max;
        out.nu = b.nu.value_or(*b.psi_min);
        out.C0 = config.initial.C0;
        out.validate();
        return out;
    }
    if (b.psi_min || b.psi_max) throw ConfigError("bounds.psi_min and bounds.psi_max must be given together");
    const ModelParams params = config.params();
    const RadialFunction rho0 = density_from_config(config);
    const RadialFunction u0 = velocity_from_config(config);
    const InfluenceSpec phi = influence_from_config(config);
    double D = 0.0;
    if (config.influence.D) {
        D = *config.influence.D;
    } else {
        D = estimate_flock_diameter(rho0, u0, params, phi, simulation_from_config(config));
        spdlog::info("estimated flock diameter D = {}", D);
    }
    AlignmentBounds out = compute_bounds(rho0, u0, phi, D, static_cast<int>(params.n));
    if (b.nu) out.nu = *b.nu;
    return out;
}

ClassificationOutcome classify_seed(const RunConfig& config, const InitialSection& seed,
                                    const AlignmentBounds& bounds) {
    const ModelParams params = config.params();
    params.validate();
    if (params.model == ModelKind::EulerAlignment) {
        ComparisonKind kind;
        if (config.bounds.kind == "q") kind = ComparisonKind::Q;
        else if (config.bounds.kind == "G") kind = ComparisonKind::G;
        else throw ConfigError("bounds.kind must be q or G");
        const double C0 = config.bounds.psi_min ? seed.C0 : bounds.C0;
        return comparison_classify(kind, need(seed.y0, "initial.y0"), C0, bounds, params.n, config.integrator);
    }
    CharState y;
    y.p = need(seed.p0, "initial.p0");
    const bool poisson = params.model == ModelKind::EulerPoisson;
    y.rho = poisson ? need(seed.rho0, "initial.rho0") : seed.rho0.value_or(1.0);
    if (params.n != 1.0) {
        y.q = need(seed.q0, "initial.q0");
        y.s = poisson ? need(seed.s0, "initial.s0") : seed.s0.value_or(0.0);
    } else {
        y.q = seed.q0.value_or(0.0);
        y.s = seed.s0.value_or(0.0);
    }
    return classify_ep(y, params, config.integrator);
}

int cmd_classify(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    format_of(ctx, "json");
    const ModelParams params = cfg.params();
    AlignmentBounds bounds;
    if (params.model == ModelKind::EulerAlignment) bounds = bounds_from_config(cfg);
    const ClassificationOutcome o = classify_seed(cfg, cfg.initial, bounds);

    json diag = {{"reason", o.reason},
                 {"termination", to_string(o.termination)},
                 {"t_final", number(o.t_final)},
                 {"max_norm", number(o.max_norm)},
                 {"final_state", numbers(o.final_state)},
                 {"model", cfg.model.name},
                 {"n", number(params.n)}};
    if (params.model == ModelKind::EulerPoisson && params.n == 1.0)
        diag["region"] = to_string(sigma_1d(*cfg.initial.p0, *cfg.initial.rho0, params.kappa, params.c));
    if (params.model == ModelKind::EulerAlignment)
        diag["bounds"] = {{"psi_min", number(bounds.psi_min)}, {"psi_max", number(bounds.psi_max)},
                          {"nu", number(bounds.nu)},           {"C0", number(bounds.C0)},
                          {"D", number(bounds.D)},             {"mass", number(bounds.mass)}};
    json j = {{"verdict", to_string(o.verdict)}, {"exit_code", exit_code(o.verdict)}};
    if (std::isfinite(o.t_estimate)) j["t_estimate"] = number(o.t_estimate);
    j["diagnostics"] = diag;
    j["provenance"] = provenance_json(cfg);
    const std::string body = j.dump() + "\n";
    sink(ctx) << body;
    if (!ctx.out_dir.empty()) emit(ctx, "classify.json", body);
    return exit_code(o.verdict);
}

int cmd_sweep(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const SweepSection& s = cfg.sweep;
    const std::string fmt = format_of(ctx, "csv");
    for (const std::string& a : {s.x_axis, s.y_axis})
        if (std::find(axis_names().begin(), axis_names().end(), a) == axis_names().end())
            throw ConfigError("unknown sweep axis '" + a + "'");
    if (s.x_axis == s.y_axis) throw ConfigError("sweep axes must differ");
    if (s.x_count == 0 || s.y_count == 0) throw ConfigError("sweep counts must be positive");
    if (s.x_count > kMaxCells / s.y_count) throw ConfigError("sweep grid exceeds 10^6 cells");

    const ModelParams params = cfg.params();
    params.validate();
    AlignmentBounds bounds;
    if (params.model == ModelKind::EulerAlignment) bounds = bounds_from_config(cfg);
    const std::vector<double> xs = axis_values(s.x_min, s.x_max, s.x_count);
    const std::vector<double> ys = axis_values(s.y_min, s.y_max, s.y_count);
    const std::size_t cells = xs.size() * ys.size();
    std::vector<int> codes(cells, 1);
    // Validate one cell up front so missing keys are a usage error, not a grid of failures.
    {
        InitialSection probe = cfg.initial;
        set_axis(probe, s.x_axis, xs[0]);
        set_axis(probe, s.y_axis, ys[0]);
        classify_seed(cfg, probe, bounds);
    }
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, cells), [&](const tbb::blocked_range<std::size_t>& range) {
        for (std::size_t k = range.begin(); k != range.end(); ++k) {
            InitialSection seed = cfg.initial;
            set_axis(seed, s.y_axis, ys[k / xs.size()]);
            set_axis(seed, s.x_axis, xs[k % xs.size()]);
            try {
                codes[k] = exit_code(classify_seed(cfg, seed, bounds).verdict);
            } catch (const std::exception&) {
                codes[k] = 1;
            }
        }
    });
    std::size_t failed = std::count(codes.begin(), codes.end(), 1);
    if (failed) spdlog::warn("{} sweep cells were rejected (code 1)", failed);

    std::ostringstream out;
    if (fmt == "csv") {
        out << provenance_line(cfg) << "\n";
        std::vector<std::string> header{s.y_axis + "\\" + s.x_axis};
        for (double x : xs) header.push_back(format_double(x));
        write_csv_row(out, header);
        for (std::size_t j = 0; j < ys.size(); ++j) {
            std::vector<std::string> row{format_double(ys[j])};
            for (std::size_t i = 0; i < xs.size(); ++i) row.push_back(std::to_string(codes[j * xs.size() + i]));
            write_csv_row(out, row);
        }
    } else {
        json grid = json::array();
        for (std::size_t j = 0; j < ys.size(); ++j)
            grid.push_back(std::vector<int>(codes.begin() + j * xs.size(), codes.begin() + (j + 1) * xs.size()));
        json j = {{"x_axis", s.x_axis}, {"x", numbers(xs)},  {"y_axis", s.y_axis},
                  {"y", numbers(ys)},   {"codes", grid},     {"provenance", provenance_json(cfg)}};
        out << j.dump() << "\n";
    }
    emit(ctx, fmt == "csv" ? "sweep.csv" : "sweep.json", out.str());
    return 0;
}

int cmd_curves(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const std::string fmt = format_of(ctx, "csv");
    const ModelParams params = cfg.params();
    params.validate();
    if (cfg.curves.samples < 2) throw ConfigError("curves.samples must be at least 2");
    std::vector<std::string> names;
    std::vector<double> xs;
    std::vector<std::vector<double>> columns;
    std::vector<std::string> unsupported;  // per column, empty when supported
    std::string x_name = "x";

    if (params.model == ModelKind::EulerAlignment) {
        const AlignmentBounds bounds = bounds_from_config(cfg);
        if (!(cfg.curves.x_max > 0.0)) throw ConfigError("curves.x_max must be positive");
        xs = axis_values(0.0, cfg.curves.x_max, cfg.curves.samples);
        for (CurveKind k : {CurveKind::SigmaQPlus, CurveKind::SigmaQMinus, CurveKind::SigmaGPlus,
                            CurveKind::SigmaGMinus}) {
            names.push_back(to_string(k));
            std::vector<double> col(xs.size());
            try {
                const EnhancedCurve c =
                    enhanced_curve(k, bounds, params.n, cfg.curves.x_max, cfg.integrator, cfg.curves.samples);
                for (std::size_t i = 0; i < xs.size(); ++i) col[i] = curve_value(c, xs[i]);
                unsupported.emplace_back();
            } catch (const UnsupportedRegime& e) {
                unsupported.emplace_back(e.what());
            }
            columns.push_back(std::move(col));
        }
    } else if (params.model == ModelKind::EulerPoisson) {
        x_name = "v0";
        if (!(cfg.curves.v0_max > 0.0)) throw ConfigError("curves.v0_max must be positive");
        xs = axis_values(0.0, cfg.curves.v0_max, cfg.curves.samples + 1);
        xs.erase(xs.begin());
        names.push_back("sigma_plus");
        std::vector<double> col(xs.size());
        try {
            if (!(params.n > 2.0)) throw UnsupportedRegime("explicit bound needs n > 2");
            const ThresholdConstants k = compute_threshold_constants(
                params, need(cfg.initial.q0, "initial.q0"), need(cfg.initial.s0, "initial.s0"), cfg.integrator);
            for (std::size_t i = 0; i < xs.size(); ++i) col[i] = explicit_sigma_plus(xs[i], k, params.kappa, params.n);
            unsupported.emplace_back();
        } catch (const UnsupportedRegime& e) {
            unsupported.emplace_back(e.what());
        } catch (const DomainError& e) {
            unsupported.emplace_back(e.what());
        }
        columns.push_back(std::move(col));
    } else {
        throw ConfigError("curves needs model euler-alignment or euler-poisson");
    }
    for (std::size_t c = 0; c < names.size(); ++c)
        if (!unsupported[c].empty()) spdlog::warn("{}: unsupported: {}", names[c], unsupported[c]);

    std::ostringstream out;
    if (fmt == "csv") {
        out << provenance_line(cfg) << "\n";
        for (std::size_t c = 0; c < names.size(); ++c)
            if (!unsupported[c].empty()) out << "# " << names[c] << ": unsupported: " << unsupported[c] << "\n";
        std::vector<std::string> header{x_name};
        header.insert(header.end(), names.begin(), names.end());
        write_csv_row(out, header);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            std::vector<std::string> row{format_double(xs[i])};
            for (std::size_t c = 0; c < names.size(); ++c)
                row.push_back(unsupported[c].empty() ? format_double(columns[c][i]) : "unsupported");
            write_csv_row(out, row);
        }
    } else {
        json curves = json::object();
        for (std::size_t c = 0; c < names.size(); ++c)
            curves[names[c]] = unsupported[c].empty() ? numbers(columns[c]) : json("unsupported");
        json j = {{x_name, numbers(xs)}, {"curves", curves}, {"provenance", provenance_json(cfg)}};
        out << j.dump() << "\n";
    }
    emit(ctx, fmt == "csv" ? "curves.csv" : "curves.json", out.str());
    return 0;
}

int cmd_simulate(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const std::string fmt = format_of(ctx, "csv");
    const ModelParams params = cfg.params();
    params.validate();
    const RadialFunction rho0 = density_from_config(cfg);
    const RadialFunction u0 = velocity_from_config(cfg);
    const SimulationConfig sim = simulation_from_config(cfg);
    const SimulationResult res = params.model == ModelKind::EulerAlignment
                                     ? simulate_ea(rho0, u0, params, influence_from_config(cfg), sim)
                                     : simulate_ep(rho0, u0, params, sim);
    const std::vector<DiagnosticsRow> diag = diagnostics_series(res.snapshots);
    const FieldSnapshot& last = res.snapshots.back();

    json meta = {{"verdict", to_string(res.verdict)},
                 {"exit_code", exit_code(res.verdict)},
                 {"reason", res.reason},
                 {"t_blowup", number(res.t_blowup)},
                 {"crossed", res.crossed},
                 {"crossing_t", number(res.crossing_t)},
                 {"crossing_r", number(res.crossing_r)},
                 {"crossing_index", res.crossing_index},
                 {"snapshots", res.snapshots.size()},
                 {"final_time", number(last.t)},
                 {"mass", number(last.mass)},
                 {"provenance", provenance_json(cfg)}};

    std::ostringstream out;
    if (fmt == "csv") {
        out << provenance_line(cfg) << "\n";
        write_csv_row(out, std::vector<std::string>{"t", "max_grad", "V", "support", "min_r", "mass", "bkm"});
        for (const DiagnosticsRow& r : diag)
            write_csv_row(out, std::vector<double>{r.t, r.max_grad, r.V, r.support, r.min_r, r.mass, r.bkm});
    } else {
        json rows = json::array();
        for (const DiagnosticsRow& r : diag)
            rows.push_back({{"t", number(r.t)},
                            {"max_grad", number(r.max_grad)},
                            {"V", number(r.V)},
                            {"support", number(r.support)},
                            {"min_r", number(r.min_r)},
                            {"mass", number(r.mass)},
                            {"bkm", number(r.bkm)}});
        out << json{{"meta", meta}, {"diagnostics", rows}}.dump() << "\n";
    }
    emit(ctx, fmt == "csv" ? "diagnostics.csv" : "diagnostics.json", out.str());

    if (!ctx.out_dir.empty()) {
        emit(ctx, "meta.json", meta.dump(2) + "\n");
        if (cfg.simulate.write_snapshots) {
            for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
                const FieldSnapshot& s = res.snapshots[k];
                std::ostringstream snap;
                snap << provenance_line(cfg) << "\n# t=" << format_double(s.t) << "\n";
                std::vector<std::string> header{"r", "rho", "u", "p", "q", "d", "eta"};
                const bool ea = !s.psi.empty();
                if (ea) header.insert(header.end(), {"psi", "G"});
                write_csv_row(snap, header);
                for (std::size_t i = 0; i < s.r.size(); ++i) {
                    std::vector<double> row{s.r[i], s.rho[i], s.u[i], s.p[i], s.q[i], s.d[i], s.eta[i]};
                    if (ea) row.insert(row.end(), {s.psi[i], s.G[i]});
                    write_csv_row(snap, row);
                }
                char name[32];
                std::snprintf(name, sizeof name, "snapshot_%04zu.csv", k);
                emit(ctx, name, snap.str());
            }
        }
    }
    if (res.verdict != Verdict::GlobalBounded) spdlog::warn("simulation: {} ({})", to_string(res.verdict), res.reason);
    return exit_code(res.verdict);
}

std::vector<std::pair<double, double>> parse_seeds(const std::string& text) {
    std::vector<std::pair<double, double>> seeds;
    std::istringstream list(text);
    for (std::string item; std::getline(list, item, ';');) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        RunConfig scratch;
        const auto comma = item.find(',');
        if (comma == std::string::npos) throw ConfigError("seed '" + item + "' is not q,s");
        auto strip = [](std::string v) {
            v.erase(0, v.find_first_not_of(" \t"));
            v.erase(v.find_last_not_of(" \t") + 1);
            return v;
        };
        set_config_value(scratch, "initial.q0", strip(item.substr(0, comma)));
        set_config_value(scratch, "initial.s0", strip(item.substr(comma + 1)));
        seeds.emplace_back(*scratch.initial.q0, *scratch.initial.s0);
    }
    return seeds;
}

int cmd_phase_portrait(const CommandContext& ctx) {
    const RunConfig& cfg = ctx.config;
    const std::string fmt = format_of(ctx, "csv");
    const ModelParams params = cfg.params();
    params.validate();
    if (params.model != ModelKind::EulerPoisson) throw ConfigError("phase-portrait needs model euler-poisson");
    const auto seeds = parse_seeds(cfg.portrait.seeds);
    if (seeds.empty()) throw ConfigError("missing required key 'portrait.seeds'");
    PortraitOptions opts;
    opts.rescaled = cfg.portrait.rescaled;
    opts.converge_radius = cfg.portrait.converge_radius;
    const auto entries = qs_phase_portrait(params, seeds, cfg.integrator, opts);

    const std::string tn = opts.rescaled ? "tau" : "t", qn = opts.rescaled ? "qhat" : "q",
                      sn = opts.rescaled ? "shat" : "s";
    std::ostringstream out;
    json bundle = json::array();
    if (fmt == "csv") {
        out << provenance_line(cfg) << "\n";
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto& e = entries[k];
            out << "# seed " << k << " " << format_double(e.q0) << " " << format_double(e.s0) << " "
                << to_string(e.verdict) << "\n";
        }
        write_csv_row(out, std::vector<std::string>{"seed", tn, qn, sn});
    }
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto& e = entries[k];
        if (e.verdict == PortraitVerdict::Invalid) {
            spdlog::warn("seed {} ({}, {}) skipped: {}", k, e.q0, e.s0, e.reason);
            continue;
        }
        const TrajectoryRecord& rec = e.run.record;
        if (fmt == "csv") {
            for (std::size_t i = 0; i < rec.size(); ++i)
                write_csv_row(out, std::vector<std::string>{std::to_string(k), format_double(rec.time(i)),
                                                            format_double(rec.value(i, 0)),
                                                            format_double(rec.value(i, 1))});
        } else {
            std::vector<double> t(rec.size()), q(rec.size()), s(rec.size());
            for (std::size_t i = 0; i < rec.size(); ++i) {
                t[i] = rec.time(i);
                q[i] = rec.value(i, 0);
                s[i] = rec.value(i, 1);
            }
            json item = {{"seed", k},          {"q0", number(e.q0)}, {"s0", number(e.s0)},
                         {"verdict", to_string(e.verdict)}, {tn, numbers(t)}, {qn, numbers(q)}, {sn, numbers(s)}};
            if (e.orbit.found) item["period"] = number(e.orbit.period);
            bundle.push_back(item);
        }
    }
    if (fmt == "json") out << json{{"trajectories", bundle}, {"provenance", provenance_json(cfg)}}.dump() << "\n";
    emit(ctx, fmt == "csv" ? "portrait.csv" : "portrait.json", out.str());
    return 0;
}

int run_command(const std::string& name, const CommandContext& ctx) {
    if (name == "classify") return cmd_classify(ctx);
    if (name == "sweep") return cmd_sweep(ctx);
    if (name == "curves") return cmd_curves(ctx);
    if (name == "simulate") return cmd_simulate(ctx);
    if (name == "phase-portrait") return cmd_phase_portrait(ctx);
    throw ConfigError("unknown command '" + name + "'");
}

}  // namespace ctflow::cli
