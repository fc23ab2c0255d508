#pragma once

// Command-line front end: trajectories, session, verify, attack, chsh.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "pilotkey/physics.hpp"
#include "pilotkey/protocol.hpp"

namespace pilotkey {

namespace exit_code {
constexpr int success = 0;
constexpr int failure = 1;
constexpr int anticorrelation_abort = 10;
constexpr int bell_abort = 11;
constexpr int integration_failure = 20;
constexpr int usage = 64;
}  // namespace exit_code

struct RunConfig {
    PhysParams params;
    std::uint64_t master_seed = 1;
    OutcomeMode mode = OutcomeMode::sign_law;
    double t_end = 0.0;  // 0 selects default_t_end(params)
    double dt = 1e-3;
    std::size_t n_pairs = 10000;
    std::string output_path;
    double test_fraction = 0.5;
    double bell_tolerance = 0.2;
    ProtocolVariant variant = ProtocolVariant::s_flip;
    bool knows_s = false;
    double intercept_fraction = 0.0;
    bool inject_violation = false;
    bool reveal_hidden = false;
    std::size_t samples = 100000;  // verify: equivariance ensemble size
    double t_probe = 0.1;          // verify: equivariance probe time
    std::string preset = "default";
};

std::string config_to_json(const RunConfig& config);
/// Missing keys keep their defaults. Throws std::invalid_argument on malformed input.
RunConfig config_from_json(const std::string& text);

/// Runs one subcommand. args[0] is the program name. Data goes to `out`
/// unless the config names an output path (a directory for trajectories).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pilotkey
