#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "flowbins/allocation.hpp"
#include "flowbins/decomposition.hpp"
#include "flowbins/flows.hpp"
#include "flowbins/graph.hpp"

namespace flowbins {

// One preprocessing product: the decomposition and the per-edge plans.
struct Preprocessed {
    DecompTree tree;
    PlanSet plans;
};

Preprocessed preprocess(const Graph& g, Partitioner p, std::uint64_t seed, int jobs = 1);

enum class StrategyKind { OneChoice, Greedy, Flow, StaleFlow };

const char* strategy_kind_name(StrategyKind k);
StrategyKind strategy_kind_from_name(const std::string& name);
bool needs_plans(StrategyKind k);

struct StrategySpec {
    StrategyKind kind = StrategyKind::Greedy;
    double beta = 1.0;     // < 1 wraps the strategy in the 1+beta model
    double stale_c = 1.0;  // stale refresh interval multiplier on n ln n
};

std::unique_ptr<Strategy> make_strategy(const StrategySpec& spec, const Graph& g,
                                        const Preprocessed* pre);

struct CheckpointStat {
    std::int64_t t = 0;
    std::int64_t gap = 0;            // max load - min load
    double upper_gap = 0.0;          // max load - t/n
    double max_sibling_gap = 0.0;    // max_i |avg(left) - avg(right)| (0 without a tree)
    double max_parent_child_gap = 0.0;
};

struct RunStats {
    std::vector<CheckpointStat> points;
    std::uint64_t seed = 0;
    std::string strategy;
};

std::int64_t gap_of(const LoadState& st);
double upper_gap_of(const LoadState& st);
CheckpointStat snapshot(const LoadState& st, const DecompTree* tree, std::int64_t t);

// 1, 2, 4, ... plus the final ball count
std::vector<std::int64_t> geometric_checkpoints(std::int64_t balls);

// Draws `balls` uniform edge ids and feeds them to the strategy; records
// stats at the checkpoints. Deterministic per seed. Optional trace CSV:
// t,edge,node_or_empty,sign,chosen.
RunStats run(const Graph& g, Strategy& strategy, std::int64_t balls,
             std::span<const std::int64_t> checkpoints, std::uint64_t seed,
             std::ostream* trace = nullptr);

struct GraphMeta {
    std::string family;
    int n = 0;
    int d = 0;
    int k = 0;
};

GraphMeta graph_meta(const Graph& g, const std::string& family);

// CSV schema shared by run and sweep outputs.
std::string csv_header();
void append_csv(std::ostream& out, const GraphMeta& meta, const std::string& strategy,
                std::uint64_t seed, const CheckpointStat& point);

struct BallsRule {
    std::int64_t fixed = 0;    // used when > 0
    double exponent = 2.5;     // otherwise ceil(n^exponent) ...
    std::int64_t cap = 30000000;  // ... capped here

    std::int64_t resolve(int n) const;
};

struct SweepConfig {
    Family family = Family::Cycle;
    std::vector<int> sizes;
    StrategySpec strategy;
    Partitioner partitioner = Partitioner::Auto;
    int degree = 0;        // random_regular
    int bridge_count = 1;  // dumbbell
    BallsRule balls;
    int runs = 8;
    std::uint64_t seed = 1;
    int jobs = 0;  // 0: hardware concurrency
};

struct SweepRow {
    GraphMeta meta;
    std::string strategy;
    std::uint64_t seed = 0;
    CheckpointStat final_point;
};

struct SweepSummary {
    int n = 0;
    std::int64_t balls = 0;
    double mean_gap = 0.0;
    double ci95 = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepSummary> summary;
};

// Runs are parallel across (size, seed); aggregation order is fixed, so the
// output does not depend on the job count.
SweepResult sweep(const SweepConfig& config);
void write_sweep_csv(const SweepResult& result, std::ostream& out);

enum class EpsRule { Floor, Strongest, UniformRandom };

// Two bins with steady-state probabilities pi1, pi2 and per-step drift
// eps_t >= eps pointing toward the emptier bin.
struct TwoPointConfig {
    double pi1 = 0.5;
    double eps = 0.1;
    EpsRule rule = EpsRule::Floor;
};

struct TwoPointResult {
    std::vector<std::pair<std::int64_t, double>> trajectory;  // (t, delta) at checkpoints
    std::vector<double> exceed_fraction;  // per threshold, fraction of steps |delta| >= thr
    std::int64_t l1 = 0, l2 = 0;
    double final_delta = 0.0;
};

TwoPointResult two_point_run(const TwoPointConfig& config, std::int64_t balls, std::uint64_t seed,
                             std::span<const double> abs_delta_thresholds);

struct MincutLowerBoundResult {
    std::int64_t balls = 0;
    double threshold = 0.0;  // required gap: cprime * d / k
    int hits = 0;
    int seeds = 0;
    double frequency = 0.0;
    std::vector<std::int64_t> gaps;
};

// Cut starvation on a near-disconnected graph: any strategy shows a gap of
// order d/k at T ~ c n^2 d^2 / k^2.
MincutLowerBoundResult lower_bound_mincut(const Graph& g, const StrategyFactory& factory,
                                          int seeds, std::uint64_t base_seed, double c = 0.01,
                                          double cprime = 0.25, int jobs = 0);

struct CouponResult {
    std::int64_t window = 0;
    int windows = 0;
    double freq_unfilled_vertex = 0.0;     // some vertex got no ball in the window
    double freq_unrequested_vertex = 0.0;  // some vertex saw no incident request
};

// Windows of ceil(n ln n) balls from a fresh state each.
CouponResult lower_bound_coupon(const Graph& g, const StrategyFactory& factory, int windows,
                                std::uint64_t base_seed, std::int64_t window_override = -1);

std::vector<double> upper_gap_stat(const RunStats& stats);

// Strided index-parallel helper; results must be written by index.
void parallel_for(int jobs, std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace flowbins
