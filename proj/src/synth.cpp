#include "lsc/synth.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>

#include "lsc/errors.hpp"

namespace lsc::synth {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t key_of(double theta, double epsilon) {
    std::uint64_t a, b;
    std::memcpy(&a, &theta, sizeof a);
    std::memcpy(&b, &epsilon, sizeof b);
    // splitmix-style stir
    std::uint64_t k = a ^ (b * 0x9e3779b97f4a7c15ULL);
    k ^= k >> 30;
    k *= 0xbf58476d1ce4e5b9ULL;
    k ^= k >> 27;
    return k;
}

}  // namespace

std::vector<std::string> stub_provider(double theta, double epsilon) {
    int len = static_cast<int>(std::ceil(3.0 * std::log2(1.0 / epsilon)));
    if (len < 1) len = 1;
    std::mt19937_64 rng(key_of(theta, epsilon));
    std::vector<std::string> seq;
    seq.reserve(len);
    for (int i = 0; i < len; ++i) {
        switch (rng() % 4) {
            case 0: seq.push_back("h"); break;
            case 1: seq.push_back("s"); break;
            default: seq.push_back("t"); break;
        }
    }
    return seq;
}

std::vector<std::string> synthesize_rz(double theta, double epsilon, const Provider& provider) {
    if (!(epsilon > 0.0)) throw ParseError("rz synthesis requires epsilon > 0");

    // Normalise to [0, 2*pi).
    double reduced = std::fmod(theta, 2.0 * kPi);
    if (reduced < 0) reduced += 2.0 * kPi;

    // Exact eighth-turn ladder: no synthesis needed.
    double steps = reduced / (kPi / 4.0);
    long k = std::lround(steps);
    if (std::abs(steps - static_cast<double>(k)) < 1e-9) {
        switch (k % 8) {
            case 0: return {};
            case 1: return {"t"};
            case 2: return {"s"};
            case 3: return {"s", "t"};
            case 4: return {"z"};
            case 5: return {"z", "t"};
            case 6: return {"sdg"};
            case 7: return {"tdg"};
        }
    }

    // Rotations below the precision collapse to the identity.
    double dist = std::min(reduced, 2.0 * kPi - reduced);
    if (dist <= epsilon) return {};

    std::vector<std::string> seq = provider(theta, epsilon);
    if (seq.empty()) return seq;
    for (const auto& op : seq)
        if (op != "h" && op != "s" && op != "sdg" && op != "t" && op != "tdg" &&
            op != "x" && op != "z")
            throw ParseError("synthesis-provider-failure: non Clifford+T opcode " + op);
    return seq;
}

}  // namespace lsc::synth
