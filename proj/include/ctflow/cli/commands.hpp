#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ctflow/cli/config.hpp"
#include "ctflow/euler_alignment.hpp"
#include "ctflow/ode.hpp"
#include "ctflow/profile.hpp"
#include "ctflow/radial_pde.hpp"

namespace ctflow::cli {

struct CommandContext {
    RunConfig config;
    std::string out_dir;  // empty: results go to `out`
    std::string format;   // csv | json; empty selects the command default
    std::ostream* out = nullptr;
};

const std::vector<std::string>& command_names();

// Returns the process exit code. Usage errors surface as ConfigError.
int run_command(const std::string& name, const CommandContext& ctx);

int cmd_classify(const CommandContext& ctx);
int cmd_sweep(const CommandContext& ctx);
int cmd_curves(const CommandContext& ctx);
int cmd_simulate(const CommandContext& ctx);
int cmd_phase_portrait(const CommandContext& ctx);

RadialFunction density_from_config(const RunConfig& config);
RadialFunction velocity_from_config(const RunConfig& config);
InfluenceSpec influence_from_config(const RunConfig& config);
SimulationConfig simulation_from_config(const RunConfig& config);

// Largest outer shell edge over a simulate_ea run.
double estimate_flock_diameter(const RadialFunction& rho0, const RadialFunction& u0, const ModelParams& params,
                               const InfluenceSpec& phi, const SimulationConfig& sim);

// Explicit [bounds] when psi_min and psi_max are set, else computed from the profiles.
AlignmentBounds bounds_from_config(const RunConfig& config);

// Verdict for the seed in [initial]; `bounds` is only read for euler-alignment.
ClassificationOutcome classify_seed(const RunConfig& config, const InitialSection& seed,
                                    const AlignmentBounds& bounds);

std::vector<std::pair<double, double>> parse_seeds(const std::string& text);

}  // namespace ctflow::cli
