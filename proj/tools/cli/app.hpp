// app.hpp - trace-sim command line entry point.
//
// Exit codes: 0 success, 2 configuration, schema or usage error, 3 solver
// failure, 4 fit failure.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "table.hpp"

namespace tracecli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitFit = 4;

struct RunOptions {
    std::string config;
    std::filesystem::path out = ".";
    std::optional<std::uint64_t> seed;  // falls back to the config's seed, then 1
    unsigned jobs = 1;
    Format format = Format::csv;
    // fit only
    std::string model;
    std::string data;
    std::size_t bootstrap = 1000;
};

// args excludes the program name. Diagnostics go to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_simulate(const RunOptions& opt, std::ostream& out);
int cmd_sweep(const RunOptions& opt, std::ostream& out);
int cmd_shape_control(const RunOptions& opt, std::ostream& out);
int cmd_phase_offset(const RunOptions& opt, std::ostream& out);
int cmd_fringe_sim(const RunOptions& opt, std::ostream& out);
int cmd_fit(const RunOptions& opt, std::ostream& out);
int cmd_fig1b(const RunOptions& opt, std::ostream& out);

}  // namespace tracecli
