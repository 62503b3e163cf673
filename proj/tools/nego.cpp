#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "nego/elicitation.hpp"
#include "nego/errors.hpp"
#include "nego/experiment.hpp"
#include "nego/io.hpp"

namespace {

using namespace nego;

SolveMode mode_from(const std::string& name) {
    if (name == "exact") return SolveMode::kExact;
    if (name == "approx") return SolveMode::kApprox;
    throw config_error("expected --mode exact|approx, got '" + name + "'");
}

SearchMethod search_from(const std::string& name) {
    if (name == "auto") return SearchMethod::kAuto;
    if (name == "table") return SearchMethod::kDynamicProgram;
    if (name == "branch") return SearchMethod::kBranchAndBound;
    throw config_error("expected --search auto|table|branch, got '" + name + "'");
}

bool switch_from(const std::string& name, const char* flag) {
    if (name == "on") return true;
    if (name == "off") return false;
    throw config_error(std::string("expected ") + flag + " on|off, got '" + name + "'");
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open '" + path + "'");
    return in;
}

void print_shares(std::ostream& out, const char* label, const std::vector<int>& shares) {
    out << label;
    for (int s : shares) out << " " << s;
    out << "\n";
}

void print_adversary(std::ostream& out, const RegretCertificate& cert, std::span<const SampleSet> samples) {
    for (std::size_t i = 0; i < cert.adversary.size(); ++i) {
        out << "adversary " << samples[i].wm_id();
        const StepUtility& u = cert.adversary[i];
        for (std::size_t t = 0; t < u.level_count(); ++t)
            out << " " << u.breakpoint(t) << ":" << format_double(u.level_value(t));
        out << "\n";
    }
}

std::string joined(const std::vector<int>& shares) {
    std::string out;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        if (i) out.push_back(',');
        out += std::to_string(shares[i]);
    }
    return out;
}

struct SolveArgs {
    std::string instance;
    std::string mode = "exact";
    int extensions = 3;
    std::string pruning = "on";
    std::string search = "auto";
    std::uint64_t seed = 0;
    bool trace = false;
};

int run_solve(const SolveArgs& args) {
    std::ifstream in = open_input(args.instance);
    Instance inst = read_instance(in);
    SolveOptions opts{mode_from(args.mode), args.extensions, switch_from(args.pruning, "--pruning"), args.seed,
                      search_from(args.search)};
    if (inst.allocation) {
        RegretCertificate cert = max_regret(inst.samples, *inst.allocation, opts.search);
        std::cout << "regret " << format_double(cert.regret) << "\n";
        print_shares(std::cout, "subject", cert.subject.shares);
        print_shares(std::cout, "witness", cert.witness.shares);
        print_adversary(std::cout, cert, inst.samples);
        return 0;
    }
    std::vector<TraceRow> rows;
    SolveStats stats;
    MmrResult r = minimax_allocation(inst.samples, opts, &stats, args.trace ? &rows : nullptr);
    std::cout << "mmr " << format_double(r.regret) << "\n";
    print_shares(std::cout, "allocation", r.allocation.shares);
    print_shares(std::cout, "witness", r.certificate.witness.shares);
    print_shares(std::cout, "base", r.base.shares);
    std::cout << "refine-steps " << r.refine_steps << "\n";
    std::cout << "frontier seen " << stats.frontier_seen << " expanded " << stats.frontier_expanded << " pruned "
              << stats.frontier_pruned << "\n";
    print_adversary(std::cout, r.certificate, inst.samples);
    for (const TraceRow& row : rows) {
        std::cout << "trace " << joined(row.base.shares);
        std::cout << " bound=" << (std::isnan(row.lower_bound) ? "none" : format_double(row.lower_bound));
        std::cout << " pruned=" << (row.pruned ? 1 : 0);
        std::cout << " regret=" << (row.pruned ? "none" : format_double(row.regret)) << "\n";
    }
    return 0;
}

struct ElicitArgs {
    std::string config;
    std::string strategy = "heuristic-split";
    std::uint64_t seed = 0;
    double threshold = 0;
    int max_rounds = 0; // 0: take the config's value
    std::string out;
    bool witness_point = false;
    // empty: take the config's value
    std::string mode, pruning, search;
    int extensions = -1;
};

int run_elicit(const ElicitArgs& args) {
    std::ifstream in = open_input(args.config);
    ExperimentConfig cfg = parse_experiment_config(in);

    NegotiationConfig nc;
    nc.strategy = strategy_from_string(args.strategy);
    nc.regret_threshold = args.threshold;
    nc.max_rounds = args.max_rounds > 0 ? args.max_rounds : cfg.max_rounds;
    nc.seed = args.seed;
    nc.solver = cfg.solver;
    nc.witness_point = args.witness_point;
    if (!args.mode.empty()) nc.solver.mode = mode_from(args.mode);
    if (!args.pruning.empty()) nc.solver.pruning = switch_from(args.pruning, "--pruning");
    if (!args.search.empty()) nc.solver.search = search_from(args.search);
    if (args.extensions >= 0) nc.solver.extension_samples = args.extensions;

    std::vector<std::unique_ptr<UtilityOracle>> oracles;
    std::vector<UtilityOracle*> raw;
    for (const WmSpec& spec : cfg.wm_specs) {
        oracles.push_back(make_oracle(spec, cfg.grid));
        raw.push_back(oracles.back().get());
    }
    NegotiationResult res = run_negotiation(raw, nc);

    std::vector<RunRecord> rows;
    for (const RoundRecord& r : res.trace)
        rows.push_back({0, nc.seed, to_string(nc.strategy), r.round, r.queries_per_wm, r.mmr, r.allocation.shares,
                        r.solve_ms, r.prunes});
    if (args.out.empty()) {
        write_csv(std::cout, rows);
    } else {
        std::ofstream out(args.out);
        if (!out) throw config_error("cannot write '" + args.out + "'");
        write_csv(out, rows);
    }
    std::cerr << "stopped: " << to_string(res.reason) << " (mmr " << format_double(res.final_solution.regret)
              << ")\n";
    return 0;
}

struct ExperimentArgs {
    std::string config;
    std::string out;
};

int run_experiment_cmd(const ExperimentArgs& args) {
    std::ifstream in = open_input(args.config);
    ExperimentConfig cfg = parse_experiment_config(in);
    std::string dir = args.out;
    if (dir.empty()) {
        if (const char* env = std::getenv("NEGO_OUT_DIR")) dir = env;
    }
    if (dir.empty()) dir = cfg.output;
    if (dir.empty()) dir = ".";

    std::vector<RunRecord> records = run_experiment(cfg);
    std::filesystem::create_directories(dir);
    std::filesystem::path csv_path = std::filesystem::path(dir) / "runs.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw config_error("cannot write '" + csv_path.string() + "'");
    write_csv(csv, records);
    std::vector<PlotSeries> series = aggregate_by_strategy(records);
    emit_plot_data(dir, series);
    std::cout << "wrote " << csv_path.string() << " and " << series.size() << " plot series\n";
    return 0;
}

struct OracleArgs {
    std::string config;
    std::string wm;
    std::string points;
    int sweep = 0;
};

const std::string& wm_spec_id(const WmSpec& spec) {
    if (const auto* model = std::get_if<WmModel>(&spec)) return model->wm_id;
    if (const auto* synth = std::get_if<SyntheticWmSpec>(&spec)) return synth->wm_id;
    return std::get<TabulatedSpec>(spec).wm_id;
}

int run_oracle(const OracleArgs& args) {
    std::ifstream in = open_input(args.config);
    ExperimentConfig cfg = parse_experiment_config(in);
    const WmSpec* spec = nullptr;
    for (const WmSpec& s : cfg.wm_specs)
        if (wm_spec_id(s) == args.wm) spec = &s;
    if (!spec) throw config_error("no wm '" + args.wm + "' in the config");
    std::unique_ptr<UtilityOracle> oracle = make_oracle(*spec, cfg.grid);

    std::vector<int> units;
    if (args.sweep > 0) {
        for (int i = 0; i <= args.sweep; ++i)
            units.push_back(static_cast<int>(static_cast<long>(cfg.grid.resolution) * i / args.sweep));
    } else if (!args.points.empty()) {
        std::stringstream ss(args.points);
        std::string item;
        while (std::getline(ss, item, ',')) units.push_back(cfg.grid.snap(parse_double(item)));
    } else {
        throw config_error("oracle needs --points or --sweep");
    }
    for (int u : units)
        std::cout << format_double(cfg.grid.to_real(u)) << " " << format_double(oracle->query(u)) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"resource negotiation by minimax regret over sampled utilities"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    CLI::App* solve = app.add_subcommand("solve", "minimax allocation (or regret certificate) for an instance file");
    solve->add_option("--instance", solve_args.instance, "instance file")->required();
    solve->add_option("--mode", solve_args.mode, "exact|approx");
    solve->add_option("--extensions", solve_args.extensions, "random extensions per frontier point (approx)");
    solve->add_option("--pruning", solve_args.pruning, "on|off");
    solve->add_option("--search", solve_args.search, "auto|table|branch");
    solve->add_option("--seed", solve_args.seed, "approx-mode draw seed");
    solve->add_flag("--trace", solve_args.trace, "print one line per frontier point");

    ElicitArgs elicit_args;
    CLI::App* elicit = app.add_subcommand("elicit", "run one negotiation, CSV trace to stdout or --out");
    elicit->add_option("--config", elicit_args.config, "experiment config file")->required();
    elicit->add_option("--strategy", elicit_args.strategy, "random|halve-all|heuristic-split");
    elicit->add_option("--seed", elicit_args.seed, "run seed");
    elicit->add_option("--threshold", elicit_args.threshold, "stop when regret falls to this");
    elicit->add_option("--max-rounds", elicit_args.max_rounds, "round budget (overrides config)");
    elicit->add_option("--mode", elicit_args.mode, "exact|approx (overrides config)");
    elicit->add_option("--extensions", elicit_args.extensions, "overrides config");
    elicit->add_option("--pruning", elicit_args.pruning, "on|off (overrides config)");
    elicit->add_option("--search", elicit_args.search, "auto|table|branch (overrides config)");
    elicit->add_option("--out", elicit_args.out, "write the CSV here instead of stdout");
    elicit->add_flag("--witness-point", elicit_args.witness_point,
                     "heuristic-split asks at the witness share instead of a midpoint");

    ExperimentArgs experiment_args;
    CLI::App* experiment = app.add_subcommand("experiment", "run a full strategy-comparison experiment");
    experiment->add_option("--config", experiment_args.config, "experiment config file")->required();
    experiment->add_option("--out", experiment_args.out,
                           "output directory (default: $NEGO_OUT_DIR, then the config's `output`, then .)");

    OracleArgs oracle_args;
    CLI::App* oracle = app.add_subcommand("oracle", "evaluate a configured WM's utility at given shares");
    oracle->add_option("--config", oracle_args.config, "experiment config file")->required();
    oracle->add_option("--wm", oracle_args.wm, "WM id from the config")->required();
    oracle->add_option("--points", oracle_args.points, "comma-separated shares in [0, 1]");
    oracle->add_option("--sweep", oracle_args.sweep, "evaluate N+1 evenly spaced shares");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (solve->parsed()) return run_solve(solve_args);
        if (elicit->parsed()) return run_elicit(elicit_args);
        if (experiment->parsed()) return run_experiment_cmd(experiment_args);
        if (oracle->parsed()) return run_oracle(oracle_args);
        return 1;
    } catch (const trivial_instance_error& e) {
        std::cerr << "trivial instance: " << e.what() << "\n";
        return 3;
    } catch (const consistency_error& e) {
        std::cerr << "consistency error: " << e.what() << "\n";
        return 2;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
