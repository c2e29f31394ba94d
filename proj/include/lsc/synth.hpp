#pragma once

#include <functional>
#include <string>
#include <vector>

namespace lsc::synth {

// Maps an Rz angle to a Clifford+T opcode sequence at the given precision.
// External providers (e.g. a real gate synthesis tool) plug in here; the
// bundled stub reproduces the cost profile only, not the unitary.
using Provider = std::function<std::vector<std::string>(double theta, double epsilon)>;

// Deterministic stand-in: pseudo-random Clifford+T sequence of length
// ceil(3 * log2(1/epsilon)), keyed by (theta, epsilon). Non-semantic.
std::vector<std::string> stub_provider(double theta, double epsilon);

// Exact multiples of pi/4 bypass the provider; angles within epsilon of the
// identity synthesize to the empty sequence.
std::vector<std::string> synthesize_rz(double theta, double epsilon,
                                       const Provider& provider = stub_provider);

}  // namespace lsc::synth
