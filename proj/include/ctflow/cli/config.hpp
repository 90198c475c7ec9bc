#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctflow/model_core.hpp"
#include "ctflow/ode.hpp"

namespace ctflow::cli {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelSection {
    std::string name = "euler-poisson";
    double n = 1.0;
    double kappa = 1.0;
    double c = 0.0;
    double kappa_damp = 1.0;
    bool operator==(const ModelSection&) const = default;
};

// Initial values for classify, sweep bases and portrait-free commands. Unset means "not given".
struct InitialSection {
    std::optional<double> p0;
    std::optional<double> q0;
    std::optional<double> s0;
    std::optional<double> rho0;
    std::optional<double> y0;  // q0 or G0 for the alignment comparison classifier
    double C0 = 0.0;
    bool operator==(const InitialSection&) const = default;
};

struct BoundsSection {
    std::string kind = "q";  // q | G
    std::optional<double> psi_min;
    std::optional<double> psi_max;
    std::optional<double> nu;  // defaults to psi_min
    bool operator==(const BoundsSection&) const = default;
};

struct ProfileSection {
    std::string density = "gaussian-bump";
    double density_amplitude = 1.0;
    double density_width = 1.0;
    double density_radius = std::numeric_limits<double>::infinity();
    double density_exponent = 2.0;
    std::string density_file;
    std::string velocity = "zero";
    double velocity_amplitude = 1.0;
    double velocity_width = 1.0;
    std::string velocity_file;
    bool operator==(const ProfileSection&) const = default;
};

struct InfluenceSection {
    std::string name = "inverse-power";
    double strength = 1.0;
    double beta = 0.5;
    double lambda = 1.0;
    std::optional<double> D;  // estimated from a simulation when unset
    bool operator==(const InfluenceSection&) const = default;
};

struct SweepSection {
    std::string x_axis = "p0";
    double x_min = -4.0;
    double x_max = 4.0;
    std::size_t x_count = 50;
    std::string y_axis = "rho0";
    double y_min = 0.1;
    double y_max = 4.0;
    std::size_t y_count = 50;
    bool operator==(const SweepSection&) const = default;
};

struct CurvesSection {
    double x_max = 2.0;
    std::size_t samples = 201;
    double v0_max = 4.0;
    bool operator==(const CurvesSection&) const = default;
};

struct SimulateSection {
    std::size_t paths = 200;
    double radius = 1.0;
    double t_end = 10.0;
    double snapshot_every = 0.1;
    double dt = 0.0;
    int angular_order = 16;
    bool write_snapshots = true;
    bool operator==(const SimulateSection&) const = default;
};

struct PortraitSection {
    std::string seeds;  // "q,s; q,s; ..."
    bool rescaled = false;
    double converge_radius = 1e-2;
    bool operator==(const PortraitSection&) const = default;
};

struct RunConfig {
    ModelSection model;
    InitialSection initial;
    BoundsSection bounds;
    ProfileSection profile;
    InfluenceSection influence;
    IntegratorConfig integrator;
    SweepSection sweep;
    CurvesSection curves;
    SimulateSection simulate;
    PortraitSection portrait;

    bool operator==(const RunConfig& o) const;
    ModelParams params() const;
};

struct FieldDoc {
    std::string key;  // section.name
    std::string default_text;
    std::string doc;
};

const std::vector<FieldDoc>& config_schema();

// INI text: [section] headers, key = value lines, ';' or '#' comments. Unknown keys throw ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Every set field, shortest round-trip number formatting.
std::string serialize_config(const RunConfig& config);

// Value of one key as text, or nullopt when an optional key is unset.
std::optional<std::string> config_value(const RunConfig& config, const std::string& key);
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace ctflow::cli
