#include "app.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <yaml-cpp/exceptions.h>

#include "tracemem/core.hpp"

namespace tracecli {

namespace {

void init_logging()
{
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_color_mt("trace-sim");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
        auto level = spdlog::level::warn;
        if (const char* env = std::getenv("TRACE_SIM_LOG"); env && *env) {
            const auto parsed = spdlog::level::from_str(env);
            if (parsed != spdlog::level::off || std::string(env) == "off") {
                level = parsed;
            } else {
                spdlog::warn("unknown TRACE_SIM_LOG level '{}', using warn", env);
            }
        }
        spdlog::set_level(level);
    });
}

struct CommonFlags {
    std::uint64_t seed = 1;
    std::string format = "csv";
};

void add_common(CLI::App* sub, RunOptions& opt, CommonFlags& flags, bool config_required)
{
    auto* config = sub->add_option("--config", opt.config, "run configuration (YAML)");
    if (config_required) config->required();
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--seed", flags.seed, "64-bit master seed (overrides the config)");
    sub->add_option("--jobs", opt.jobs, "concurrent sweep points")->capture_default_str()->check(CLI::Range(1u, 1024u));
    sub->add_option("--format", flags.format, "table format")
        ->capture_default_str()
        ->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    init_logging();
    CLI::App app{"TRACE optical memory simulator", "trace-sim"};
    app.require_subcommand(1);

    RunOptions opt;
    CommonFlags flags;
    using Handler = std::function<int(const RunOptions&, std::ostream&)>;
    std::map<CLI::App*, Handler> handlers;
    const auto command = [&](const char* name, const char* help, Handler handler, bool config_required) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub, opt, flags, config_required);
        handlers[sub] = std::move(handler);
        return sub;
    };
    command("simulate", "run one storage or retrieval simulation", cmd_simulate, true);
    command("sweep", "run a fig1b, decay or mismatch sweep", cmd_sweep, true);
    command("shape-control", "compute an impedance-matched control", cmd_shape_control, true);
    command("phase-offset", "dispersion phase offset and geometry", cmd_phase_offset, true);
    command("fringe-sim", "synthetic phase-incremented fringe dataset", cmd_fringe_sim, true);
    command("fig1b", "closed-form efficiency comparison", cmd_fig1b, false);
    auto* fit = command("fit", "fit a decay, fringe or efficiency dataset", cmd_fit, false);
    fit->add_option("--model", opt.model, "decay | fringe | efficiency")
        ->required()
        ->check(CLI::IsMember({"decay", "fringe", "efficiency"}));
    fit->add_option("--data", opt.data, "input CSV")->required();
    fit->add_option("--bootstrap", opt.bootstrap, "bootstrap resamples (efficiency)")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    auto* chosen = app.get_subcommands().front();
    if (chosen->get_option("--seed")->count() > 0) opt.seed = flags.seed;
    opt.format = flags.format == "json" ? Format::json : Format::csv;

    try {
        return handlers.at(chosen)(opt, out);
    } catch (const tracemem::ConfigError& e) {
        err << "trace-sim: config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const YAML::Exception& e) {
        err << "trace-sim: config error: line " << e.mark.line + 1 << ": " << e.msg << '\n';
        return kExitConfig;
    } catch (const tracemem::FitError& e) {
        err << "trace-sim: fit failed: " << e.what() << '\n';
        return kExitFit;
    } catch (const tracemem::SolverError& e) {
        err << "trace-sim: solver failure: " << e.what() << '\n';
        return kExitSolver;
    }
}

}  // namespace tracecli
