#include "flowbins/cli.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowbins/allocation.hpp"
#include "flowbins/decomposition.hpp"
#include "flowbins/flows.hpp"
#include "flowbins/graph.hpp"
#include "flowbins/rng.hpp"
#include "flowbins/simulator.hpp"

namespace flowbins {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GraphSource {
    std::string path;
    std::string family = "cycle";
    int n = 0;
    int degree = 0;
    int bridges = 1;

    Graph resolve(std::uint64_t seed, std::string* family_out = nullptr) const {
        if (!path.empty() && n > 0)
            throw UsageError("give either --graph or --family/--n, not both");
        if (!path.empty()) {
            if (family_out) *family_out = "file";
            return load_edge_list_file(path);
        }
        if (n <= 0) throw UsageError("graph source missing: give --graph or --family with --n");
        GenSpec spec;
        spec.family = family_from_name(family);
        spec.n = n;
        spec.degree = degree;
        spec.bridge_count = bridges;
        spec.seed = seed;
        if (family_out) *family_out = family;
        return generate(spec);
    }
};

void add_graph_flags(CLI::App* cmd, GraphSource& src) {
    cmd->add_option("--graph", src.path, "edge-list file");
    cmd->add_option("--family", src.family,
                    "graph family: cycle, torus2d, hypercube, complete, random_regular, dumbbell");
    cmd->add_option("--n", src.n, "vertex count");
    cmd->add_option("--d", src.degree, "degree (random_regular)");
    cmd->add_option("--k", src.bridges, "bridge count (dumbbell)");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

int cmd_generate(const GraphSource& src, std::uint64_t seed, const std::string& out_path) {
    Graph g = GraphSource{"", src.family, src.n, src.degree, src.bridges}.resolve(seed);
    if (out_path.empty()) {
        write_edge_list(g, std::cout);
    } else {
        auto out = open_out(out_path);
        write_edge_list(g, out);
    }
    std::cerr << "generated " << src.family << ": n=" << g.n << " m=" << g.m() << "\n";
    return 0;
}

int cmd_preprocess(const GraphSource& src, Partitioner partitioner, std::uint64_t seed, int jobs,
                   const std::string& out_prefix) {
    Graph g = src.resolve(seed);
    Preprocessed pre = preprocess(g, partitioner, seed, jobs);
    require_balanced(pre.tree);
    if (!out_prefix.empty()) {
        auto tree_out = open_out(out_prefix + ".tree");
        write_tree(pre.tree, tree_out);
        auto plan_out = open_out(out_prefix + ".plans");
        write_plans(pre.plans, plan_out);
    }
    std::ostringstream report;
    report.precision(12);
    report << "n " << g.n << "\n"
           << "m " << g.m() << "\n"
           << "d " << g.regular_degree().value_or(g.mean_degree())
           << (g.regular_degree() ? "" : " (mean; graph is irregular)") << "\n"
           << "k " << edge_connectivity(g) << "\n"
           << "depth " << pre.tree.max_depth() << "\n"
           << "D " << pre.plans.total_drift << "\n"
           << "congestion_ratio " << pre.plans.congestion_ratio << "\n"
           << "max_support " << pre.plans.max_support << "\n";
    std::cout << report.str();
    return 0;
}

struct StrategyFlags {
    std::string name = "greedy";
    double beta = 1.0;
    double stale_c = 1.0;
    std::string tree_path;
    std::string plans_path;
};

void add_strategy_flags(CLI::App* cmd, StrategyFlags& flags) {
    cmd->add_option("--strategy", flags.name, "one_choice, greedy, flow or stale_flow");
    cmd->add_option("--beta", flags.beta, "wrap in the 1+beta model when < 1");
    cmd->add_option("--stale-c", flags.stale_c, "stale refresh multiplier on n ln n");
    cmd->add_option("--tree", flags.tree_path, "decomposition file from preprocess");
    cmd->add_option("--plans", flags.plans_path, "edge-plan file from preprocess");
}

struct LoadedStrategy {
    StrategySpec spec;
    Preprocessed pre;
    bool has_pre = false;
};

LoadedStrategy load_strategy(const StrategyFlags& flags, const Graph& g) {
    LoadedStrategy ls;
    ls.spec.kind = strategy_kind_from_name(flags.name);
    ls.spec.beta = flags.beta;
    ls.spec.stale_c = flags.stale_c;
    if (needs_plans(ls.spec.kind)) {
        if (flags.tree_path.empty() || flags.plans_path.empty())
            throw std::runtime_error("strategy '" + flags.name +
                                     "' needs --tree and --plans; run preprocess first");
        std::ifstream tin(flags.tree_path);
        if (!tin) throw std::runtime_error("cannot open tree file: " + flags.tree_path);
        ls.pre.tree = read_tree(tin);
        if (ls.pre.tree.n() != g.n)
            throw std::runtime_error("tree file does not match the graph (vertex count)");
        std::ifstream pin(flags.plans_path);
        if (!pin) throw std::runtime_error("cannot open plan file: " + flags.plans_path);
        ls.pre.plans = read_plans(pin, g);
        ls.has_pre = true;
    }
    return ls;
}

int cmd_run(const GraphSource& src, const StrategyFlags& strat_flags, std::int64_t balls,
            std::uint64_t seed, const std::string& out_path, const std::string& trace_path,
            bool final_only) {
    std::string family;
    Graph g = src.resolve(seed, &family);
    LoadedStrategy ls = load_strategy(strat_flags, g);
    auto strat = make_strategy(ls.spec, g, ls.has_pre ? &ls.pre : nullptr);
    GraphMeta meta = graph_meta(g, family);
    std::vector<std::int64_t> cps =
        final_only ? std::vector<std::int64_t>{balls} : geometric_checkpoints(balls);
    std::ofstream trace;
    if (!trace_path.empty()) trace = open_out(trace_path);
    RunStats stats = run(g, *strat, balls, cps, seed, trace_path.empty() ? nullptr : &trace);
    std::ostringstream csv;
    csv.precision(12);
    csv << csv_header() << "\n";
    for (const auto& point : stats.points) append_csv(csv, meta, stats.strategy, seed, point);
    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        auto out = open_out(out_path);
        out << csv.str();
        const auto& fin = stats.points.back();
        std::cout << "final t=" << fin.t << " gap=" << fin.gap << " upper_gap=" << fin.upper_gap
                  << "\n";
    }
    return 0;
}

// key=value lines; '#' comments; command-line flags win over file values
void apply_sweep_config(const std::string& path, const CLI::App* sw, std::string& family,
                        std::vector<int>& sizes, StrategyFlags& strat, std::string& partitioner,
                        int& degree, int& bridges, std::int64_t& balls, double& balls_exp,
                        std::int64_t& balls_cap, int& runs, std::uint64_t& seed, int& jobs,
                        std::string& out_path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    auto given = [&](const std::string& flag) { return sw->count(flag) > 0; };
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
        std::string key = line.substr(first, eq - first);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        for (char& c : key)
            if (c == '-') c = '_';
        bool known = true;
        if (key == "family") {
            if (!given("--family")) family = value;
        } else if (key == "sizes") {
            if (!given("--sizes")) {
                sizes.clear();
                std::istringstream ss(value);
                std::string tok;
                while (std::getline(ss, tok, ',')) sizes.push_back(std::stoi(tok));
            }
        } else if (key == "strategy") {
            if (!given("--strategy")) strat.name = value;
        } else if (key == "beta") {
            if (!given("--beta")) strat.beta = std::stod(value);
        } else if (key == "stale_c") {
            if (!given("--stale-c")) strat.stale_c = std::stod(value);
        } else if (key == "partitioner") {
            if (!given("--partitioner")) partitioner = value;
        } else if (key == "d") {
            if (!given("--d")) degree = std::stoi(value);
        } else if (key == "k") {
            if (!given("--k")) bridges = std::stoi(value);
        } else if (key == "balls") {
            if (!given("--balls")) balls = std::stoll(value);
        } else if (key == "balls_exp") {
            if (!given("--balls-exp")) balls_exp = std::stod(value);
        } else if (key == "balls_cap") {
            if (!given("--balls-cap")) balls_cap = std::stoll(value);
        } else if (key == "runs") {
            if (!given("--runs")) runs = std::stoi(value);
        } else if (key == "seed") {
            if (!given("--seed")) seed = std::stoull(value);
        } else if (key == "jobs") {
            if (!given("--jobs")) jobs = std::stoi(value);
        } else if (key == "out") {
            if (!given("--out")) out_path = value;
        } else {
            known = false;
        }
        if (!known)
            throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" + key +
                             "'");
    }
}

int cmd_sweep(const std::string& family, const std::vector<int>& sizes,
              const StrategyFlags& strat_flags, Partitioner partitioner, int degree, int bridges,
              std::int64_t balls, double balls_exp, std::int64_t balls_cap, int runs,
              std::uint64_t seed, int jobs, const std::string& out_path) {
    if (sizes.empty()) throw UsageError("sweep: --sizes must list at least one size");
    SweepConfig config;
    config.family = family_from_name(family);
    config.sizes = sizes;
    config.strategy.kind = strategy_kind_from_name(strat_flags.name);
    config.strategy.beta = strat_flags.beta;
    config.strategy.stale_c = strat_flags.stale_c;
    config.partitioner = partitioner;
    config.degree = degree;
    config.bridge_count = bridges;
    config.balls.fixed = balls;
    config.balls.exponent = balls_exp;
    config.balls.cap = balls_cap;
    config.runs = runs;
    config.seed = seed;
    config.jobs = jobs;
    SweepResult result = sweep(config);
    std::ostringstream csv;
    csv.precision(12);
    write_sweep_csv(result, csv);
    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        auto out = open_out(out_path);
        out << csv.str();
    }
    std::ostringstream table;
    table.precision(6);
    table << "n,balls,mean_gap,ci95\n";
    for (const auto& s : result.summary)
        table << s.n << "," << s.balls << "," << s.mean_gap << "," << s.ci95 << "\n";
    std::cerr << table.str();
    return 0;
}

int cmd_verify(const GraphSource& src, Partitioner partitioner, std::uint64_t seed, int jobs,
               int states) {
    Graph g = src.resolve(seed);
    Preprocessed pre = preprocess(g, partitioner, seed, jobs);
    bool all_ok = true;
    auto report = [&](const std::string& what, bool ok, const std::string& detail) {
        std::cout << what << ": " << (ok ? "ok" : "FAIL") << " (" << detail << ")\n";
        all_ok = all_ok && ok;
    };

    BalanceReport bal = verify_balance(pre.tree);
    bool depth_ok = pre.tree.max_depth() <= depth_bound(g.n);
    {
        std::ostringstream d;
        d << "depth=" << pre.tree.max_depth() << " worst_ratio=" << bal.worst_ratio;
        if (!bal.ok) d << " pair=(" << bal.bad_ancestor << "," << bal.bad_descendant << ")";
        report("balance", bal.ok && depth_ok, d.str());
    }
    double drift = pre.plans.total_drift;
    OrthogonalityReport ortho = verify_orthogonality(pre.tree, drift);
    {
        std::ostringstream d;
        d << "max_residual=" << ortho.max_residual;
        if (!ortho.ok) d << " pair=(" << ortho.bad_i << "," << ortho.bad_j << ")";
        report("orthogonality", ortho.ok, d.str());
    }
    TotalDemandReport demand = verify_total_demand(pre.tree, drift);
    {
        std::ostringstream d;
        d << "max_total=" << demand.max_total << " bound=" << 8.0 * drift;
        if (!demand.ok) d << " node=" << demand.bad_j;
        report("total_demand", demand.ok, d.str());
    }
    auto flows = plan_node_flows(pre.plans);
    ConservationReport cons = verify_conservation(g, pre.tree, flows, drift);
    {
        std::ostringstream d;
        d << "max_residual=" << cons.max_residual;
        if (!cons.ok) d << " node=" << cons.bad_node << " vertex=" << cons.bad_vertex;
        report("conservation", cons.ok, d.str());
    }
    PlanValidityReport valid = verify_plan_validity(pre.plans);
    {
        std::ostringstream d;
        d << "max_sum=" << valid.max_sum;
        if (!valid.ok) d << " edge=" << valid.bad_edge;
        report("plan_validity", valid.ok, d.str());
    }
    {
        Rng rng(derive_seed(seed, 0xf00d));
        LoadState st = LoadState::make(g.n, &pre.tree);
        double worst = 0.0;
        for (int s = 0; s < states; ++s) {
            std::vector<std::int64_t> loads(g.n);
            for (auto& l : loads) l = static_cast<std::int64_t>(rng.next_below(1000));
            st.set_loads(loads);
            worst = std::max(worst, max_sibling_drift_residual(g, pre.tree, pre.plans, st));
        }
        std::ostringstream d;
        d << "states=" << states << " max_residual=" << worst;
        report("sibling_drift", worst <= 1e-9, d.str());
    }
    return all_ok ? 0 : 2;
}

int cmd_twopoint(double pi1, double eps, const std::string& rule_name, std::int64_t balls,
                 int seeds, std::uint64_t seed, const std::vector<double>& xs,
                 const std::string& out_path) {
    TwoPointConfig config;
    config.pi1 = pi1;
    config.eps = eps;
    if (rule_name == "floor")
        config.rule = EpsRule::Floor;
    else if (rule_name == "max")
        config.rule = EpsRule::Strongest;
    else if (rule_name == "random")
        config.rule = EpsRule::UniformRandom;
    else
        throw UsageError("twopoint: --rule must be floor, max or random");
    std::vector<double> thresholds;
    for (double x : xs) thresholds.push_back(x / eps);
    std::vector<double> pooled(xs.size(), 0.0);
    for (int s = 0; s < seeds; ++s) {
        TwoPointResult res =
            two_point_run(config, balls, derive_seed(seed, static_cast<std::uint64_t>(s) + 1),
                          thresholds);
        for (size_t i = 0; i < pooled.size(); ++i) pooled[i] += res.exceed_fraction[i];
    }
    std::ostringstream csv;
    csv.precision(12);
    csv << "x,abs_delta_threshold,exceed_fraction,envelope\n";
    for (size_t i = 0; i < xs.size(); ++i)
        csv << xs[i] << "," << thresholds[i] << "," << pooled[i] / std::max(1, seeds) << ","
            << 10.0 * std::exp(-xs[i] / 8.0) << "\n";
    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        auto out = open_out(out_path);
        out << csv.str();
        std::cout << csv.str();
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"flow-guided allocation for the graphical balls-into-bins process"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    auto add_seed = [&seed](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "base RNG seed")->capture_default_str();
    };

    // generate
    auto* gen = app.add_subcommand("generate", "emit an edge-list file for a graph family");
    add_seed(gen);
    GraphSource gen_src;
    std::string gen_out;
    add_graph_flags(gen, gen_src);
    gen->add_option("--out", gen_out, "output path (default stdout)");

    // preprocess
    auto* prep = app.add_subcommand("preprocess", "build the decomposition tree and edge plans");
    add_seed(prep);
    GraphSource prep_src;
    std::string prep_partitioner = "auto", prep_prefix;
    int prep_jobs = 0;
    add_graph_flags(prep, prep_src);
    prep->add_option("--partitioner", prep_partitioner, "auto, arc, mincut or bfs");
    prep->add_option("--out-prefix", prep_prefix, "writes <prefix>.tree and <prefix>.plans");
    prep->add_option("--jobs", prep_jobs, "flow solver parallelism (0: cores)");

    // run
    auto* runc = app.add_subcommand("run", "simulate one request stream");
    add_seed(runc);
    GraphSource run_src;
    StrategyFlags run_strat;
    std::int64_t run_balls = 1000000;
    std::string run_out, run_trace;
    bool run_final_only = false;
    add_graph_flags(runc, run_src);
    add_strategy_flags(runc, run_strat);
    runc->add_option("--balls", run_balls, "number of balls")->capture_default_str();
    runc->add_option("--out", run_out, "CSV path (default stdout)");
    runc->add_option("--trace", run_trace, "per-ball trace CSV path");
    runc->add_flag("--final-only", run_final_only, "record only the final checkpoint");

    // sweep
    auto* sw = app.add_subcommand("sweep", "mean final gap across sizes and seeds");
    add_seed(sw);
    std::string sw_config;
    sw->add_option("--config", sw_config, "key=value config file");
    std::string sw_family = "cycle", sw_partitioner = "auto", sw_out;
    std::vector<int> sw_sizes;
    StrategyFlags sw_strat;
    int sw_degree = 0, sw_bridges = 1, sw_runs = 8, sw_jobs = 0;
    std::int64_t sw_balls = 0, sw_cap = 30000000;
    double sw_exp = 2.5;
    sw->add_option("--family", sw_family, "graph family")->capture_default_str();
    sw->add_option("--sizes", sw_sizes, "comma-separated size list")->delimiter(',');
    add_strategy_flags(sw, sw_strat);
    sw->add_option("--partitioner", sw_partitioner, "auto, arc, mincut or bfs");
    sw->add_option("--d", sw_degree, "degree (random_regular)");
    sw->add_option("--k", sw_bridges, "bridge count (dumbbell)");
    sw->add_option("--balls", sw_balls, "fixed ball count (0: use --balls-exp)");
    sw->add_option("--balls-exp", sw_exp, "balls = ceil(n^exp)")->capture_default_str();
    sw->add_option("--balls-cap", sw_cap, "ball count cap")->capture_default_str();
    sw->add_option("--runs", sw_runs, "runs per size")->capture_default_str();
    sw->add_option("--jobs", sw_jobs, "parallel runs (0: cores)");
    sw->add_option("--out", sw_out, "CSV path (default stdout)");

    // verify
    auto* ver = app.add_subcommand("verify", "check the preprocessing identities");
    add_seed(ver);
    GraphSource ver_src;
    std::string ver_partitioner = "auto";
    int ver_states = 100, ver_jobs = 0;
    add_graph_flags(ver, ver_src);
    ver->add_option("--partitioner", ver_partitioner, "auto, arc, mincut or bfs");
    ver->add_option("--states", ver_states, "random load states for the drift identity")
        ->capture_default_str();
    ver->add_option("--jobs", ver_jobs, "flow solver parallelism (0: cores)");

    // twopoint
    auto* tp = app.add_subcommand("twopoint", "two-bin concentration process tail");
    add_seed(tp);
    double tp_pi1 = 0.5, tp_eps = 0.1;
    std::string tp_rule = "floor", tp_out;
    std::int64_t tp_balls = 1000000;
    int tp_seeds = 32;
    std::vector<double> tp_x = {8, 16, 24, 32};
    tp->add_option("--pi1", tp_pi1, "bin 1 steady-state probability")->capture_default_str();
    tp->add_option("--eps", tp_eps, "drift floor")->capture_default_str();
    tp->add_option("--rule", tp_rule, "per-step drift rule: floor, max or random")
        ->capture_default_str();
    tp->add_option("--balls", tp_balls, "steps per seed")->capture_default_str();
    tp->add_option("--seeds", tp_seeds, "independent seeds")->capture_default_str();
    tp->add_option("--x", tp_x, "tail points (threshold = x / eps)")->delimiter(',');
    tp->add_option("--out", tp_out, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_src, seed, gen_out);
        if (prep->parsed())
            return cmd_preprocess(prep_src, partitioner_from_name(prep_partitioner), seed,
                                  prep_jobs, prep_prefix);
        if (runc->parsed())
            return cmd_run(run_src, run_strat, run_balls, seed, run_out, run_trace,
                           run_final_only);
        if (sw->parsed()) {
            if (!sw_config.empty())
                apply_sweep_config(sw_config, sw, sw_family, sw_sizes, sw_strat, sw_partitioner,
                                   sw_degree, sw_bridges, sw_balls, sw_exp, sw_cap, sw_runs, seed,
                                   sw_jobs, sw_out);
            return cmd_sweep(sw_family, sw_sizes, sw_strat, partitioner_from_name(sw_partitioner),
                             sw_degree, sw_bridges, sw_balls, sw_exp, sw_cap, sw_runs, seed,
                             sw_jobs, sw_out);
        }
        if (ver->parsed())
            return cmd_verify(ver_src, partitioner_from_name(ver_partitioner), seed, ver_jobs,
                              ver_states);
        if (tp->parsed())
            return cmd_twopoint(tp_pi1, tp_eps, tp_rule, tp_balls, tp_seeds, seed, tp_x, tp_out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 3;
}

}  // namespace flowbins
