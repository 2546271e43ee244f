// The benchmark commands behind the mcrepar CLI. Each parses its options
// from a Config, runs the sweep, and returns the files to write; run_command
// adds the file I/O and the exit-code mapping so the CLI main stays thin and
// tests can drive everything in-process.
//
// Every CSV starts with '#'-prefixed metadata (command, version, seed, a
// config echo) followed by one header row. Re-running a command with the
// same config and seed reproduces every non-timing column bitwise; columns
// named wall_time_* are the only timing columns.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mcrepar/config.hpp"

namespace mcrepar {

struct CommandOptions {
    std::optional<std::uint64_t> seed;  // --seed, overrides the config's seed
    std::optional<std::string> out_dir;  // --out, overrides the config's out
    bool plots = true;                   // --no-plots clears
};

struct OutputFile {
    std::string name;  // basename ("kl_error.csv"); resolved against out dir
    std::string content;
};

// graph_size.csv (+ graph_size.svg): node counts of the direct per-sample
// build vs the factored tuple build per (family, g, M).
std::vector<OutputFile> cmd_graph_size(Config& cfg, const CommandOptions& opt);

// kl_error.csv, kl_error_sigma.csv, kl_error_d.csv (+ SVGs): factored-route
// KL estimation error against the Gaussian closed form, swept over sample
// count, posterior sigma, and mean-field model size.
std::vector<OutputFile> cmd_kl_error(Config& cfg, const CommandOptions& opt);

// timing.csv (+ timing.svg): median wall time per gradient-carrying estimate
// for the factored route, the direct build, and a per-draw gradient
// accumulation loop.
std::vector<OutputFile> cmd_timing(Config& cfg, const CommandOptions& opt);

// train_demo.csv, train_demo_summary.csv (+ train_demo.svg): the two-moons
// confidence study across m_kl values and seed pairs.
std::vector<OutputFile> cmd_train_demo(Config& cfg, const CommandOptions& opt);

// Full CLI behavior: load config, dispatch by command name, write outputs.
// Returns 0 on success, 2 on configuration errors, 3 on numeric divergence
// (non-finite build or training loss), 1 on anything else (I/O failures).
// Paths written are appended to *written when given; diagnostics go to err.
int run_command(const std::string& name, const std::string& config_path,
                const CommandOptions& opt, std::ostream& err,
                std::vector<std::string>* written = nullptr);

}  // namespace mcrepar
