#pragma once

#include <map>
#include <string>
#include <vector>

#include "lsc/router.hpp"

namespace lsc::cli {

// Exit codes: 0 success, 2 parse, 3 allocation, 4 routing/binding,
// 5 validation failure.
constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitAllocation = 3;
constexpr int kExitRouting = 4;
constexpr int kExitValidation = 5;

struct RunConfig {
    std::string command;  // compile | bench | validate | render | gen
    std::string circuit_path;
    std::string device_path;
    std::string stream_path;
    std::string layout_path;
    std::string out_dir = ".";

    router::Policy policy = router::Policy::HeuristicLocked;
    bool disjoint = false;
    bool optimize = true;
    std::uint64_t seed = 1;

    // Generator / bench parameters.
    std::string family;
    std::map<std::string, std::string> params;
    std::vector<std::pair<int, int>> sweep;  // board sizes
};

int cmd_compile(const RunConfig& config);
int cmd_bench(const RunConfig& config);
int cmd_validate(const RunConfig& config);
int cmd_render(const RunConfig& config);
int cmd_gen(const RunConfig& config);

int exit_code_for(const std::exception& e);

}  // namespace lsc::cli
