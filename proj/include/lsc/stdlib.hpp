#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lsc/ir.hpp"
#include "lsc/json_io.hpp"

namespace lsc::gen {

enum class ToffoliStrategy { TDag, Extern, Ccz };
enum class FactoryStyle { Parallel15, Slice };

ToffoliStrategy strategy_from_string(const std::string& s);

// --- benchmark circuit generators -------------------------------------------
// All generators are deterministic in their parameters (and seed, where one
// applies) and emit circuit documents in the standard wire format.

io::CircuitDoc gen_cnot_network(int n, int rounds, std::uint64_t seed);

// Distillation round: fifteen magic-state consumptions producing one output.
// `t_source` overrides the "T" extern declaration, e.g. with a packaged
// lower-level factory; levels above one default to a nominal footprint that
// grows with the level.
io::CircuitDoc gen_t_factory(int level, FactoryStyle style,
                             const std::optional<ir::ExternTemplate>& t_source = std::nullopt);

// CCZ distillery: eight T inputs, one three-qubit output. The fast variant
// consumes four lower-level CCZ states instead.
io::CircuitDoc gen_ccz_factory(bool fast = false);

io::CircuitDoc gen_toffoli(ToffoliStrategy strategy);
io::CircuitDoc gen_toffoli_network(int gates, int registers, ToffoliStrategy strategy,
                                   std::uint64_t seed);
io::CircuitDoc gen_mcx(int n_controls, ToffoliStrategy strategy = ToffoliStrategy::TDag);
io::CircuitDoc gen_qft(int n, bool use_externs = false);
io::CircuitDoc gen_rz(double theta, double epsilon);

io::CircuitDoc gen_adder(int n, ToffoliStrategy strategy = ToffoliStrategy::TDag);
io::CircuitDoc gen_multiplier(int a_bits, int b_bits,
                              ToffoliStrategy strategy = ToffoliStrategy::TDag);
io::CircuitDoc gen_divider(int a_bits, int b_bits,
                           ToffoliStrategy strategy = ToffoliStrategy::TDag);

io::CircuitDoc gen_qram_bb(int addr_bits, int word_bits, bool use_externs = false);
io::CircuitDoc gen_qram_fanout_swap(int addr_bits, int word_bits,
                                    ToffoliStrategy strategy = ToffoliStrategy::TDag);

// CLI-facing registry: family name plus string parameters.
io::CircuitDoc generate(const std::string& family,
                        const std::map<std::string, std::string>& params);
std::vector<std::string> family_names();

// --- classical binary-vector simulator ---------------------------------------

struct BitVectorState {
    std::map<ir::RegisterSymbol, int> bits;
    long long gates_applied = 0;

    int at(const ir::RegisterSymbol& sym) const;
};

// Exact bit evolution of X / CNOT / Toffoli circuits (with ancilla prep and
// Z measurements). Macros other than `toffoli` are expanded first; any
// non-classical gate raises a parse error.
BitVectorState classical_simulate(const ir::CircuitDag& dag,
                                  const std::map<ir::RegisterSymbol, int>& inputs);

// Little-endian register packing helpers for the arithmetic oracles.
void set_uint(std::map<ir::RegisterSymbol, int>& bits, const std::string& reg, int width,
              std::uint64_t value);
std::uint64_t read_uint(const BitVectorState& state, const std::string& reg, int width);

}  // namespace lsc::gen
