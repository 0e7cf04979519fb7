#pragma once

// The `mgnn` command-line front end. Kept in the library so tests can run
// subcommands in-process.

#include <iosfwd>
#include <string>
#include <vector>

#include "mgnn/risk.hpp"

namespace mgnn::cli {

enum ExitCode : int { ok = 0, failure = 1, usage = 2 };

/// Parses `args` (without the program name) and runs the subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Two heat layers, 1 -> width (tanh) -> 1 (linear). The k = 0 taps are zero
/// so every entry of the frequency response decays like e^{-a}.
GnnParams convergence_network(int width, int taps, Rng& rng);

/// Single heat layer with h = [1] and identity activation: output equals input.
GnnParams identity_network();

/// Random coefficients c_i ~ N(0, 1) / (1 + lambda_i) for every mode up to `cutoff`.
BandlimitedSignal convergence_signal(const AnalyticManifold& manifold, double cutoff, Rng& rng);

}  // namespace mgnn::cli
