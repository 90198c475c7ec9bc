#include "ctflow/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace ctflow::cli {

namespace {

std::string number_text(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    if (b != e && *b == '+') ++b;
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw ConfigError("key '" + key + "': not a number: '" + text + "'");
    return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
    long long v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError("key '" + key + "': not an integer: '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError("key '" + key + "': not a boolean: '" + text + "'");
}

struct Field {
    std::string key;
    std::string doc;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::optional<std::string>(const RunConfig&)> get;
};

template <class Access>
Field real(std::string key, std::string doc, Access a) {
    return {key, std::move(doc),
            [a, key](RunConfig& c, const std::string& v) { a(c) = parse_number(key, v); },
            [a](const RunConfig& c) -> std::optional<std::string> {
                return number_text(a(const_cast<RunConfig&>(c)));
            }};
}

template <class Access>
Field opt_real(std::string key, std::string doc, Access a) {
    return {key, std::move(doc),
            [a, key](RunConfig& c, const std::string& v) { a(c) = parse_number(key, v); },
            [a](const RunConfig& c) -> std::optional<std::string> {
                const std::optional<double>& o = a(const_cast<RunConfig&>(c));
                if (!o) return std::nullopt;
                return number_text(*o);
            }};
}

template <class T, class Access>
Field integer(std::string key, std::string doc, Access a) {
    return {key, std::move(doc),
            [a, key](RunConfig& c, const std::string& v) {
                const long long x = parse_integer(key, v);
                if (x < 0) throw ConfigError("key '" + key + "' must be nonnegative");
                a(c) = static_cast<T>(x);
            },
            [a](const RunConfig& c) -> std::optional<std::string> {
                return std::to_string(a(const_cast<RunConfig&>(c)));
            }};
}

template <class Access>
Field boolean(std::string key, std::string doc, Access a) {
    return {key, std::move(doc), [a, key](RunConfig& c, const std::string& v) { a(c) = parse_bool(key, v); },
            [a](const RunConfig& c) -> std::optional<std::string> {
                return a(const_cast<RunConfig&>(c)) ? "true" : "false";
            }};
}

template <class Access>
Field text(std::string key, std::string doc, Access a) {
    return {key, std::move(doc), [a](RunConfig& c, const std::string& v) { a(c) = v; },
            [a](const RunConfig& c) -> std::optional<std::string> { return a(const_cast<RunConfig&>(c)); }};
}

#define ACC(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        text("model.name", "euler-poisson | euler-alignment | inviscid-burgers | damped-burgers", ACC(model.name)),
        real("model.n", "dimension", ACC(model.n)),
        real("model.kappa", "force strength", ACC(model.kappa)),
        real("model.c", "background density", ACC(model.c)),
        real("model.kappa_damp", "damping rate (damped-burgers)", ACC(model.kappa_damp)),

        opt_real("initial.p0", "u_r at the seed (required by classify for ODE models)", ACC(initial.p0)),
        opt_real("initial.q0", "u/r at the seed (required when n > 1)", ACC(initial.q0)),
        opt_real("initial.s0", "averaged mass at the seed (required for euler-poisson with n > 1)", ACC(initial.s0)),
        opt_real("initial.rho0", "density at the seed (required for euler-poisson; burgers default 1)",
                 ACC(initial.rho0)),
        opt_real("initial.y0", "q0 or G0 for euler-alignment classify", ACC(initial.y0)),
        real("initial.C0", "sup |zeta|/r bound for euler-alignment classify", ACC(initial.C0)),

        text("bounds.kind", "q | G", ACC(bounds.kind)),
        opt_real("bounds.psi_min", "lower psi bound; computed from the profiles when unset", ACC(bounds.psi_min)),
        opt_real("bounds.psi_max", "upper psi bound; computed from the profiles when unset", ACC(bounds.psi_max)),
        opt_real("bounds.nu", "alignment rate; defaults to psi_min", ACC(bounds.nu)),

        text("profile.density", "gaussian-bump | indicator | polynomial-decay | constant", ACC(profile.density)),
        real("profile.density_amplitude", "density amplitude", ACC(profile.density_amplitude)),
        real("profile.density_width", "density width", ACC(profile.density_width)),
        real("profile.density_radius", "density cutoff radius (inf for none)", ACC(profile.density_radius)),
        real("profile.density_exponent", "polynomial-decay exponent", ACC(profile.density_exponent)),
        text("profile.density_file", "two-column r,rho CSV; overrides profile.density", ACC(profile.density_file)),
        text("profile.velocity", "linear | rexp | tanh | rational | zero", ACC(profile.velocity)),
        real("profile.velocity_amplitude", "velocity amplitude", ACC(profile.velocity_amplitude)),
        real("profile.velocity_width", "velocity width", ACC(profile.velocity_width)),
        text("profile.velocity_file", "two-column r,u CSV; overrides profile.velocity", ACC(profile.velocity_file)),

        text("influence.name", "constant | inverse-power | exponential", ACC(influence.name)),
        real("influence.strength", "influence amplitude", ACC(influence.strength)),
        real("influence.beta", "inverse-power exponent", ACC(influence.beta)),
        real("influence.lambda", "exponential rate", ACC(influence.lambda)),
        opt_real("influence.D", "flock diameter; estimated from a simulation when unset", ACC(influence.D)),

        real("integrator.rel_tol", "relative tolerance", ACC(integrator.rel_tol)),
        real("integrator.abs_tol", "absolute tolerance", ACC(integrator.abs_tol)),
        real("integrator.h_init", "initial step", ACC(integrator.h_init)),
        real("integrator.h_min", "minimum step", ACC(integrator.h_min)),
        real("integrator.h_max", "maximum step", ACC(integrator.h_max)),
        real("integrator.t_max", "time horizon", ACC(integrator.t_max)),
        real("integrator.magnitude_cap", "blowup cap on |y|", ACC(integrator.magnitude_cap)),
        integer<std::size_t>("integrator.max_steps", "step budget", ACC(integrator.max_steps)),

        text("sweep.x_axis", "p0 | q0 | s0 | rho0 | y0 | C0", ACC(sweep.x_axis)),
        real("sweep.x_min", "first x value", ACC(sweep.x_min)),
        real("sweep.x_max", "last x value", ACC(sweep.x_max)),
        integer<std::size_t>("sweep.x_count", "x grid size", ACC(sweep.x_count)),
        text("sweep.y_axis", "p0 | q0 | s0 | rho0 | y0 | C0", ACC(sweep.y_axis)),
        real("sweep.y_min", "first y value", ACC(sweep.y_min)),
        real("sweep.y_max", "last y value", ACC(sweep.y_max)),
        integer<std::size_t>("sweep.y_count", "y grid size", ACC(sweep.y_count)),

        real("curves.x_max", "curve domain [0, x_max]", ACC(curves.x_max)),
        integer<std::size_t>("curves.samples", "samples per curve", ACC(curves.samples)),
        real("curves.v0_max", "sigma_plus domain (0, v0_max] for euler-poisson", ACC(curves.v0_max)),

        integer<std::size_t>("simulate.paths", "characteristic paths", ACC(simulate.paths)),
        real("simulate.radius", "initial radius covered by the paths", ACC(simulate.radius)),
        real("simulate.t_end", "final time", ACC(simulate.t_end)),
        real("simulate.snapshot_every", "snapshot cadence", ACC(simulate.snapshot_every)),
        real("simulate.dt", "euler-alignment step, 0 for 0.1/psi_max", ACC(simulate.dt)),
        integer<int>("simulate.angular_order", "euler-alignment angular nodes", ACC(simulate.angular_order)),
        boolean("simulate.write_snapshots", "write one CSV per snapshot", ACC(simulate.write_snapshots)),

        text("portrait.seeds", "q,s pairs separated by ';' (required by phase-portrait)", ACC(portrait.seeds)),
        boolean("portrait.rescaled", "integrate (qhat, shat) in ln(t+1)", ACC(portrait.rescaled)),
        real("portrait.converge_radius", "distance for the converging verdict", ACC(portrait.converge_radius)),
    };
    return table;
}

#undef ACC

const Field& find_field(const std::string& key) {
    for (const Field& f : fields())
        if (f.key == key) return f;
    throw ConfigError("unknown key '" + key + "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

bool RunConfig::operator==(const RunConfig& o) const {
    const auto& a = integrator;
    const auto& b = o.integrator;
    const bool same_integrator = a.rel_tol == b.rel_tol && a.abs_tol == b.abs_tol && a.h_init == b.h_init &&
                                 a.h_min == b.h_min && a.h_max == b.h_max && a.t_max == b.t_max &&
                                 a.magnitude_cap == b.magnitude_cap && a.max_steps == b.max_steps;
    return same_integrator && model == o.model && initial == o.initial && bounds == o.bounds &&
           profile == o.profile && influence == o.influence && sweep == o.sweep && curves == o.curves &&
           simulate == o.simulate && portrait == o.portrait;
}

ModelParams RunConfig::params() const {
    ModelParams p;
    try {
        p.model = model_kind_from_string(model.name);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    p.n = model.n;
    p.kappa = model.kappa;
    p.c = model.c;
    p.kappa_damp = model.kappa_damp;
    return p;
}

const std::vector<FieldDoc>& config_schema() {
    static const std::vector<FieldDoc> docs = [] {
        std::vector<FieldDoc> out;
        const RunConfig defaults;
        for (const Field& f : fields()) out.push_back({f.key, f.get(defaults).value_or("(unset)"), f.doc});
        return out;
    }();
    return docs;
}

RunConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    // ini_parser only knows ';' comments.
    std::string cleaned;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
        const std::string t = trim(line);
        if (!t.empty() && t[0] == '#') continue;
        cleaned += line + "\n";
    }
    pt::ptree tree;
    std::istringstream in(cleaned);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    RunConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("key '" + section + "' outside a section");
        for (const auto& [name, value] : body) {
            if (!value.empty()) throw ConfigError("nested key under '" + section + "." + name + "'");
            const std::string key = section + "." + name;
            find_field(key).set(cfg, trim(value.data()));
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& config) {
    std::ostringstream out;
    std::string current;
    for (const Field& f : fields()) {
        const auto value = f.get(config);
        if (!value) continue;
        const std::string section = f.key.substr(0, f.key.find('.'));
        if (section != current) {
            if (!current.empty()) out << "\n";
            out << "[" << section << "]\n";
            current = section;
        }
        out << f.key.substr(f.key.find('.') + 1) << " = " << *value << "\n";
    }
    return out.str();
}

std::optional<std::string> config_value(const RunConfig& config, const std::string& key) {
    return find_field(key).get(config);
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
    find_field(key).set(config, value);
}

}  // namespace ctflow::cli
