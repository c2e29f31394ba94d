#include <doctest.h>

#include <random>

#include "lsc/errors.hpp"
#include "lsc/json_io.hpp"
#include "lsc/sched.hpp"
#include "lsc/stdlib.hpp"
#include "test_util.hpp"

using namespace lsc;
using test::call;

namespace {

sched::HeuristicConfig config(int channels, int t_slots = 0) {
    sched::HeuristicConfig cfg;
    cfg.routing_channels = channels;
    for (int i = 0; i < t_slots; ++i) cfg.extern_slots["T"].push_back({2, 2});
    return cfg;
}

}  // namespace

TEST_CASE("a single local gate takes its declared cycles") {
    auto doc = test::doc_with_register("q", 1);
    doc.gates.push_back(call("prep_0", {"q"}));
    auto trace = sched::estimate(test::parse(doc), config(1));
    CHECK(trace.makespan == 1);
}

TEST_CASE("channel semaphore serialises independent merges") {
    auto doc = test::doc_with_register("q", 4);
    doc.gates.push_back(call("cnot", {"q[0]", "q[1]"}));
    doc.gates.push_back(call("cnot", {"q[2]", "q[3]"}));
    auto dag = test::parse(doc);
    CHECK(sched::estimate(dag, config(1)).makespan == 4);
    CHECK(sched::estimate(dag, config(2)).makespan == 2);
}

TEST_CASE("seven consumptions terminate on one slot") {
    auto dag = test::parse_expanded(gen::gen_toffoli(gen::ToffoliStrategy::TDag));
    auto one = sched::estimate(dag, config(2, 1));
    auto two = sched::estimate(dag, config(2, 2));
    CHECK(one.makespan >= two.makespan);
    CHECK(one.makespan >= dag.critical_path_length());
}

TEST_CASE("an unsatisfiable footprint is unschedulable") {
    auto doc = test::doc_with_register("q", 1);
    doc.gates.push_back(call("t", {"q"}));
    sched::HeuristicConfig cfg;
    cfg.routing_channels = 1;
    cfg.extern_slots["T"] = {{1, 1}};  // template needs 2x2
    CHECK_THROWS_AS(sched::estimate(test::parse(doc), cfg), RoutingError);
}

TEST_CASE("score: an extra channel helps a starved network") {
    auto dag = test::parse_expanded(gen::gen_cnot_network(8, 10, 3));
    sched::CandidateDelta delta;
    delta.add_channel = true;
    CHECK(sched::score_candidate(dag, config(1), delta) > 0);
}

TEST_CASE("score: an unused slot type is worthless") {
    auto dag = test::parse_expanded(gen::gen_cnot_network(4, 5, 3));
    sched::CandidateDelta delta;
    delta.extern_type = "T";
    delta.footprint = {2, 2};
    CHECK(sched::score_candidate(dag, config(2), delta) == 0);
}

TEST_CASE("score: slots beyond saturation stop helping") {
    // A serial consumption chain saturates once production outpaces demand.
    auto doc = test::doc_with_register("q", 1);
    for (int i = 0; i < 6; ++i) doc.gates.push_back(call("t", {"q"}));
    auto dag = test::parse(doc);
    sched::CandidateDelta delta;
    delta.extern_type = "T";
    delta.footprint = {2, 2};
    CHECK(sched::score_candidate(dag, config(2, 6), delta) == 0);
}

TEST_CASE("makespan is bounded below by the critical path") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto dag = test::parse(test::random_circuit(5, 30, seed));
        auto trace = sched::estimate(dag, config(2, 2));
        CHECK(trace.makespan >= dag.critical_path_length());
    }
}

TEST_CASE("resources are monotone on random dags") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        auto dag = test::parse(test::random_circuit(5, 25, seed, 0.3));
        long long prev = -1;
        for (int ch = 1; ch <= 4; ++ch) {
            long long m = sched::estimate(dag, config(ch, 2)).makespan;
            if (prev >= 0) CHECK(m <= prev);
            prev = m;
        }
        prev = -1;
        for (int slots = 1; slots <= 4; ++slots) {
            long long m = sched::estimate(dag, config(2, slots)).makespan;
            if (prev >= 0) CHECK(m <= prev);
            prev = m;
        }
    }
}

TEST_CASE("single slot never deadlocks") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto dag = test::parse(test::random_circuit(4, 30, seed, 0.5));
        auto trace = sched::estimate(dag, config(1, 1));
        CHECK(trace.makespan > 0);
    }
}

TEST_CASE("the semaphore is exact at every cycle") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto dag = test::parse(test::random_circuit(6, 40, seed, 0.2));
        const int channels = 2;
        auto trace = sched::estimate(dag, config(channels, 2));
        for (long long t = 0; t < trace.makespan; ++t) {
            int active = 0;
            for (size_t v = 0; v < dag.nodes.size(); ++v)
                if (dag.nodes[v].nonlocal && trace.start[v] <= t && t < trace.end[v])
                    ++active;
            CHECK(active <= channels);
        }
    }
}

TEST_CASE("slot occupancy intervals never overlap") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto dag = test::parse(test::random_circuit(4, 30, seed, 0.5));
        auto trace = sched::estimate(dag, config(2, 2));
        std::map<int, std::vector<std::pair<long long, long long>>> by_slot;
        for (const auto& occ : trace.occupancy)
            by_slot[occ.slot].push_back({occ.start, occ.end});
        for (auto& [slot, intervals] : by_slot) {
            std::sort(intervals.begin(), intervals.end());
            for (size_t i = 1; i < intervals.size(); ++i)
                CHECK(intervals[i - 1].second <= intervals[i].first);
        }
    }
}

TEST_CASE("ties between equal slack operations follow dag order") {
    auto doc = test::doc_with_register("q", 4);
    doc.gates.push_back(call("cnot", {"q[0]", "q[1]"}));
    doc.gates.push_back(call("cnot", {"q[2]", "q[3]"}));
    auto dag = test::parse(doc);
    auto trace = sched::estimate(dag, config(1));
    CHECK(trace.start[0] < trace.start[1]);
}

TEST_CASE("trace dump serialises for debugging") {
    auto doc = test::doc_with_register("q", 2);
    doc.gates.push_back(call("cnot", {"q[0]", "q[1]"}));
    doc.gates.push_back(call("t", {"q[0]"}));
    auto trace = sched::estimate(test::parse(doc), config(2, 1));
    auto text = lsc::io::trace_to_json(trace);
    CHECK(text.find("\"makespan\"") != std::string::npos);
    CHECK(text.find("\"occupancy\"") != std::string::npos);
}
