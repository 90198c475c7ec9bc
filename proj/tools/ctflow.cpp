#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <tbb/global_control.h>

#include "ctflow/cli/commands.hpp"
#include "ctflow/cli/config.hpp"
#include "ctflow/cli/format.hpp"

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("ctflow");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* lvl = std::getenv("CT_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));

    CLI::App app{"ctflow: critical thresholds for Euler-Poisson and Euler-alignment flows"};
    app.set_version_flag("--version", ctflow::cli::tool_version());
    app.require_subcommand(1);

    std::string config_path, out_dir, format;
    std::size_t threads = 0;
    app.add_option("--out", out_dir, "output directory (default: standard output)");
    app.add_option("--threads", threads, "worker threads (0: all cores)");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    const std::map<std::string, std::string> about = {
        {"classify", "verdict for the seed in [initial]"},
        {"sweep", "verdict grid over two [initial] axes"},
        {"curves", "threshold curves"},
        {"simulate", "radial characteristic simulation"},
        {"phase-portrait", "(q, s) trajectories for [portrait] seeds"},
    };
    for (const std::string& name : ctflow::cli::command_names()) {
        const auto it = about.find(name);
        CLI::App* sub = app.add_subcommand(name, it == about.end() ? "" : it->second);
        sub->add_option("--config", config_path, "key = value config file")->required();
        sub->add_option("--out", out_dir, "output directory (default: standard output)");
        sub->add_option("--threads", threads, "worker threads (0: all cores)");
        sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    std::optional<tbb::global_control> limit;
    if (threads > 0) limit.emplace(tbb::global_control::max_allowed_parallelism, threads);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        ctflow::cli::CommandContext ctx;
        ctx.config = ctflow::cli::load_config(config_path);
        ctx.out_dir = out_dir;
        ctx.format = format;
        ctx.out = &std::cout;
        return ctflow::cli::run_command(command, ctx);
    } catch (const ctflow::cli::ConfigError& e) {
        spdlog::error("{}", e.what());
    } catch (const ctflow::DomainError& e) {
        spdlog::error("{}", e.what());
    } catch (const ctflow::UnsupportedRegime& e) {
        spdlog::error("{}", e.what());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
    }
    return 1;
}
