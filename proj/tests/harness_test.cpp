#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nego/errors.hpp"
#include "nego/experiment.hpp"
#include "nego/io.hpp"

using namespace nego;

namespace {

ExperimentConfig parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_experiment_config(in);
}

std::string error_of(const std::string& text) {
    try {
        parse_text(text);
    } catch (const config_error& e) {
        return e.what();
    }
    return "";
}

// two tabulated step WMs on a small grid; exact solves stay instant
ExperimentConfig step_pair_config() {
    ExperimentConfig cfg;
    cfg.grid = Grid{30};
    cfg.wm_specs = {TabulatedSpec{"wm1", {0, 15, 30}, {0, 4, 10}}, TabulatedSpec{"wm2", {0, 15, 30}, {0, 6, 8}}};
    cfg.strategies = {Strategy::kHalveAll, Strategy::kHeuristicSplit};
    cfg.seeds = {7, 8};
    cfg.max_rounds = 5;
    cfg.regret_threshold = 0;
    cfg.solver.mode = SolveMode::kExact;
    return cfg;
}

} // namespace

TEST_CASE("experiment config text parses every section kind") {
    ExperimentConfig cfg = parse_text(R"(# full setup
grid 120
rounds 9
threshold 0.25
mode exact
extensions 5
pruning off
search branch
seeds 1 2 3
strategies halve-all random
output runs/out

wm model db
capacity 18
split-grid 41
class arrival 10 payment 1.5 response 0.3 width 0.05
class arrival 8 payment 2 response 0.4 width 0

wm near-step web
jump 0.55
plateau 8
ramp 0.02
full-saturation on

wm random-monotone batch
seed 7
knots 5
scale 9.5

wm tabulated fixed
point 0 0
point 60 4
point 120 10
)");

    CHECK(cfg.grid.resolution == 120);
    CHECK(cfg.max_rounds == 9);
    CHECK(cfg.regret_threshold == 0.25);
    CHECK(cfg.solver.mode == SolveMode::kExact);
    CHECK(cfg.solver.extension_samples == 5);
    CHECK(cfg.solver.pruning == false);
    CHECK(cfg.solver.search == SearchMethod::kBranchAndBound);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(cfg.strategies == std::vector<Strategy>{Strategy::kHalveAll, Strategy::kRandom});
    CHECK(cfg.output == "runs/out");

    REQUIRE(cfg.wm_specs.size() == 4);
    const auto& model = std::get<WmModel>(cfg.wm_specs[0]);
    CHECK(model.wm_id == "db");
    CHECK(model.capacity_rate == 18);
    CHECK(model.split_grid == 41);
    REQUIRE(model.classes.size() == 2);
    CHECK(model.classes[0].arrival_rate == 10);
    CHECK(model.classes[0].contract.payment == 1.5);
    CHECK(model.classes[0].contract.response_threshold == 0.3);
    CHECK(model.classes[0].contract.smoothing_width == 0.05);
    CHECK(model.classes[1].contract.smoothing_width == 0);

    const auto& web = std::get<SyntheticWmSpec>(cfg.wm_specs[1]);
    CHECK(web.wm_id == "web");
    CHECK(web.full_saturation);
    const auto& step = std::get<NearStepSpec>(web.curve);
    CHECK(step.jump == 0.55);
    CHECK(step.plateau == 8);
    CHECK(step.ramp == 0.02);

    const auto& batch = std::get<SyntheticWmSpec>(cfg.wm_specs[2]);
    CHECK(!batch.full_saturation);
    const auto& mono = std::get<RandomMonotoneSpec>(batch.curve);
    CHECK(mono.seed == 7);
    CHECK(mono.knots == 5);
    CHECK(mono.scale == 9.5);

    const auto& fixed = std::get<TabulatedSpec>(cfg.wm_specs[3]);
    CHECK(fixed.wm_id == "fixed");
    CHECK(fixed.shares == std::vector<int>{0, 60, 120});
    CHECK(fixed.utilities == std::vector<double>{0, 4, 10});
}

TEST_CASE("omitted config keys fall back to defaults") {
    ExperimentConfig cfg = parse_text(R"(grid 100
seeds 5
wm tabulated t
point 0 0
point 100 3
)");
    CHECK(cfg.max_rounds == 15);
    CHECK(cfg.regret_threshold == 0);
    CHECK(cfg.solver.mode == SolveMode::kApprox);
    CHECK(cfg.solver.extension_samples == 3);
    CHECK(cfg.solver.pruning == true);
    CHECK(cfg.solver.search == SearchMethod::kAuto);
    CHECK(cfg.output.empty());
    CHECK(cfg.strategies ==
          std::vector<Strategy>{Strategy::kHeuristicSplit, Strategy::kRandom, Strategy::kHalveAll});
}

TEST_CASE("config mistakes are reported with their line") {
    CHECK(error_of("grid 100\nbogus 1\n").find("line 2") != std::string::npos);
    CHECK(error_of("grid 100\nwm sine s\n").find("unknown wm kind") != std::string::npos);
    CHECK(error_of("grid 100\nseeds 1\nwm near-step w\npruning on\n").find("line 4") != std::string::npos);
    CHECK(error_of("grid 100\nseeds 1\nwm model m\ncapacity 5\n").find("at least one class") != std::string::npos);
    CHECK(error_of("grid 100\nseeds 1\nwm model m\nclass arrival 1 payment 2\n").find("line 4") != std::string::npos);
    CHECK(error_of("grid 100\nseeds 1\nwm tabulated t\n").find("at least one point") != std::string::npos);
    CHECK(error_of("grid 100\nseeds 1\npruning maybe\nwm tabulated t\npoint 0 0\n").find("on|off") !=
          std::string::npos);
    CHECK(error_of("grid 100\nseeds 1\nstrategies bisect\nwm tabulated t\npoint 0 0\n").find("strategy") !=
          std::string::npos);
    CHECK(error_of("grid 100\nseeds 1\nmode quick\nwm tabulated t\npoint 0 0\n").find("exact|approx") !=
          std::string::npos);
    CHECK(error_of("grid 100\nseeds 1\nrounds 0\nwm tabulated t\npoint 0 0\n").find("rounds") != std::string::npos);
    CHECK(error_of("grid 100\nseeds 1\nthreshold -2\nwm tabulated t\npoint 0 0\n").find("threshold") !=
          std::string::npos);
    CHECK(error_of("grid 30\nseeds 1\nwm tabulated t\npoint 0 0\n").find("resolution of at least") !=
          std::string::npos);
    CHECK(error_of("grid 100\nwm tabulated t\npoint 0 0\n").find("seeds") != std::string::npos);
    CHECK(error_of("grid 100\nseeds 1\n").find("no WMs") != std::string::npos);
    CHECK(error_of("grid 100\nseeds 1\nwm tabulated t\npoint 0 zero\n").find("bad number") != std::string::npos);
}

TEST_CASE("oracles are built to match their specs") {
    Grid g{10};

    WmModel two_class;
    two_class.wm_id = "m";
    two_class.capacity_rate = 20;
    two_class.classes = {{1.0, {10, 1, 0}}, {1.0, {10, 1, 0}}};
    std::unique_ptr<UtilityOracle> m = make_oracle(two_class, g);
    CHECK(m->wm_id() == "m");
    CHECK(m->query(0) == doctest::Approx(0.0));
    CHECK(m->query(1) == doctest::Approx(10.0));
    CHECK(m->query(3) == doctest::Approx(20.0));
    CHECK(m->query(3) == doctest::Approx(wm_utility(two_class, 0.3)));

    std::unique_ptr<UtilityOracle> full = make_oracle(SyntheticWmSpec{"s", NearStepSpec{0.3, 5, 0}, true}, g);
    CHECK(full->saturation_units() == 10);
    std::unique_ptr<UtilityOracle> tight = make_oracle(SyntheticWmSpec{"s", NearStepSpec{0.3, 5, 0}, false}, g);
    CHECK(tight->saturation_units() == 3);
    CHECK(tight->query(3) == doctest::Approx(5.0));
    CHECK(tight->query(2) == doctest::Approx(0.0));

    std::unique_ptr<UtilityOracle> tab = make_oracle(TabulatedSpec{"t", {0, 4, 10}, {0, 2, 6}}, g);
    CHECK(tab->saturation_units() == 10);
    CHECK(tab->query(3) == doctest::Approx(0.0));
    CHECK(tab->query(4) == doctest::Approx(2.0));
    CHECK(tab->query(9) == doctest::Approx(2.0));
    CHECK(tab->query(10) == doctest::Approx(6.0));
}

TEST_CASE("runs cover each strategy and seed in declared order") {
    ExperimentConfig cfg = step_pair_config();
    std::vector<RunRecord> rows = run_experiment(cfg);
    REQUIRE(!rows.empty());

    // blocks: (halve-all, 7), (halve-all, 8), (heuristic-split, 7), (heuristic-split, 8)
    const char* strategies[] = {"halve-all", "halve-all", "heuristic-split", "heuristic-split"};
    std::uint64_t seeds[] = {7, 8, 7, 8};
    int seen[4] = {0, 0, 0, 0};
    int prev_run = 0, prev_round = 0;
    for (const RunRecord& r : rows) {
        REQUIRE(r.run_id >= 0);
        REQUIRE(r.run_id < 4);
        CHECK(r.strategy == strategies[r.run_id]);
        CHECK(r.seed == seeds[r.run_id]);
        CHECK(r.run_id >= prev_run);
        if (r.run_id != prev_run) prev_round = 0;
        CHECK(r.round == prev_round + 1); // rounds are contiguous from 1
        prev_run = r.run_id;
        prev_round = r.round;
        ++seen[r.run_id];
        CHECK(r.alloc.size() == 2);
        if (r.round == 1) CHECK(r.queries_per_wm == 4);
    }
    for (int block : seen) CHECK(block >= 1);
}

TEST_CASE("experiment output is reproducible apart from wall time") {
    std::vector<RunRecord> a = run_experiment(step_pair_config());
    std::vector<RunRecord> b = run_experiment(step_pair_config());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i].solve_ms = 0;
        b[i].solve_ms = 0;
        CHECK(a[i] == b[i]);
    }
}

TEST_CASE("records survive the CSV round trip unchanged") {
    std::vector<RunRecord> rows = run_experiment(step_pair_config());
    std::ostringstream out;
    write_csv(out, rows);

    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "run_id,seed,strategy,round,queries_per_wm,mmr,alloc_0,alloc_1,solve_ms,prunes");

    std::istringstream full(out.str());
    std::vector<RunRecord> back = read_csv(full);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(back[i] == rows[i]); // doubles exact via shortest form
}

TEST_CASE("broken CSVs are rejected") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_csv(empty), config_error);

    std::istringstream bad_header("runid,seed,strategy,round,queries_per_wm,mmr,alloc_0,solve_ms,prunes\n");
    CHECK_THROWS_WITH_AS(read_csv(bad_header), "unexpected CSV header", config_error);

    std::istringstream short_row("run_id,seed,strategy,round,queries_per_wm,mmr,alloc_0,solve_ms,prunes\n"
                                 "0,1,random,1,4\n");
    CHECK_THROWS_WITH_AS(read_csv(short_row), "line 2: wrong field count", config_error);

    std::ostringstream sink;
    CHECK_THROWS_AS(write_csv(sink, {}), domain_error);

    std::vector<RunRecord> mixed{{0, 1, "random", 1, 4, 0.5, {1, 2}, 0, 0}, {0, 1, "random", 2, 5, 0.4, {1}, 0, 0}};
    CHECK_THROWS_AS(write_csv(sink, mixed), domain_error);
}

TEST_CASE("aggregation summarizes per strategy in first-seen order") {
    std::vector<RunRecord> rows{
        {0, 1, "b", 1, 4, 2.0, {1}, 0, 0}, {0, 1, "b", 2, 5, 1.0, {1}, 0, 0},
        {1, 2, "b", 1, 4, 4.0, {1}, 0, 0}, {2, 1, "a", 1, 4, 3.0, {1}, 0, 0},
    };
    std::vector<PlotSeries> series = aggregate_by_strategy(rows);
    REQUIRE(series.size() == 2);
    CHECK(series[0].strategy == "b");
    CHECK(series[1].strategy == "a");

    REQUIRE(series[0].points.size() == 2);
    CHECK(series[0].points[0].queries_per_wm == 4);
    CHECK(series[0].points[0].mean_mmr == doctest::Approx(3.0));
    CHECK(series[0].points[0].min_mmr == doctest::Approx(2.0));
    CHECK(series[0].points[0].max_mmr == doctest::Approx(4.0));
    CHECK(series[0].points[1].queries_per_wm == 5);
    CHECK(series[0].points[1].mean_mmr == doctest::Approx(1.0));

    REQUIRE(series[1].points.size() == 1);
    CHECK(series[1].points[0].mean_mmr == doctest::Approx(3.0));

    CHECK_THROWS_AS(aggregate_by_strategy({}), domain_error);
}

TEST_CASE("plot files carry the aggregate curves twice") {
    std::vector<RunRecord> rows = run_experiment(step_pair_config());
    std::vector<PlotSeries> series = aggregate_by_strategy(rows);
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "nego_plot_test";
    std::filesystem::remove_all(dir);
    emit_plot_data(dir, series);

    for (const PlotSeries& s : series) {
        std::ifstream dat(dir / (s.strategy + ".dat"));
        REQUIRE(dat.good());
        std::string line;
        std::getline(dat, line);
        CHECK(line == "# queries_per_wm mean_mmr min_mmr max_mmr");
        std::size_t n = 0;
        std::vector<std::string> body{line};
        while (std::getline(dat, line)) {
            body.push_back(line);
            std::istringstream fields(line);
            std::string q, mean, lo, hi;
            REQUIRE((fields >> q >> mean >> lo >> hi));
            CHECK(parse_long(q) == s.points[n].queries_per_wm);
            CHECK(parse_double(mean) == s.points[n].mean_mmr);
            CHECK(parse_double(lo) == s.points[n].min_mmr);
            CHECK(parse_double(hi) == s.points[n].max_mmr);
            ++n;
        }
        CHECK(n == s.points.size());

        std::ifstream log(dir / (s.strategy + ".logready.dat"));
        REQUIRE(log.good());
        std::size_t k = 0;
        while (std::getline(log, line)) {
            REQUIRE(k < body.size());
            CHECK(line == body[k]);
            ++k;
        }
        CHECK(k == body.size());
    }
    std::filesystem::remove_all(dir);

    CHECK_THROWS_AS(emit_plot_data(dir, {}), domain_error);
}

TEST_CASE("halving pins step-like curves down to the guaranteed band") {
    // two managers whose value jumps near a small share: after the setup
    // probes plus four halving rounds the regret must sit within half the
    // tallest jump (plus grid slack), and the runs end fully resolved
    for (unsigned seed = 0; seed < 5; ++seed) {
        ExperimentConfig cfg;
        cfg.grid = Grid{400};
        double eps_max = 0;
        for (int i = 0; i < 2; ++i) {
            double jump = 0.05 + 0.01 * ((seed * 7 + i * 3) % 18);
            double plateau = 4.0 + ((seed * 3 + i * 5) % 6);
            eps_max = std::max(eps_max, plateau);
            cfg.wm_specs.push_back(SyntheticWmSpec{"w" + std::to_string(i), NearStepSpec{jump, plateau, 0.02}, true});
        }
        cfg.strategies = {Strategy::kHalveAll};
        cfg.seeds = {seed};
        cfg.max_rounds = 8;
        cfg.regret_threshold = 0;
        std::vector<RunRecord> rows = run_experiment(cfg);
        REQUIRE(!rows.empty());
        double bound = eps_max / 2 + 2 * eps_max / 400.0;
        double best = rows[0].mmr;
        for (const RunRecord& r : rows)
            if (r.queries_per_wm <= 8) best = std::min(best, r.mmr);
        CHECK(best <= bound);
        CHECK(rows.back().mmr <= 1e-12);
    }
}

TEST_CASE("instances round trip through their text form") {
    Instance inst;
    inst.grid = Grid{10};
    inst.samples = {SampleSet("wm1", inst.grid, {0, 5, 10}, {0, 4, 10}),
                    SampleSet("wm2", inst.grid, {0, 5, 10}, {0, 6, 8})};
    inst.allocation = Allocation{{5, 5}};

    std::ostringstream out;
    write_instance(out, inst);
    std::istringstream in(out.str());
    Instance back = read_instance(in);

    CHECK(back.grid.resolution == 10);
    REQUIRE(back.samples.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back.samples[i].wm_id() == inst.samples[i].wm_id());
        CHECK(back.samples[i].thresholds() == inst.samples[i].thresholds());
        CHECK(back.samples[i].values() == inst.samples[i].values());
    }
    REQUIRE(back.allocation.has_value());
    CHECK(*back.allocation == Allocation{{5, 5}});

    inst.allocation.reset();
    std::ostringstream bare;
    write_instance(bare, inst);
    std::istringstream bare_in(bare.str());
    CHECK(!read_instance(bare_in).allocation.has_value());
}

TEST_CASE("instance files validate their shape") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_instance(in);
    };
    CHECK_THROWS_WITH_AS(parse("wm a\n0 0\n"), "line 1: grid must come before the first wm", config_error);
    CHECK_THROWS_AS(parse("grid 10\ngrid 10\n"), config_error);
    CHECK_THROWS_AS(parse("grid 10\nwm a\nwm b\n0 0\n10 1\n"), config_error);
    CHECK_THROWS_AS(parse("grid 10\nstray\n"), config_error);
    CHECK_THROWS_AS(parse("grid 10\nwm a\n0 0\n10 1\nallocation 3 4\n"), config_error);
    CHECK_THROWS_AS(parse(""), config_error);
    CHECK_THROWS_AS(parse("grid 10\nwm a\n0 zero\n"), config_error);

    // comments and blank lines are ignored
    std::istringstream ok("# instance\ngrid 10\n\nwm a # the only one\n0 0\n10 1\n");
    CHECK(read_instance(ok).samples.size() == 1);
}

TEST_CASE("number formatting survives the round trip exactly") {
    for (double v : {0.0, 0.1, -3.5e-9, 1e300, 1.0 / 3.0, 6.2499999999999997e-06}) {
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK_THROWS_AS(parse_double("1.2.3"), config_error);
    CHECK_THROWS_AS(parse_double(""), config_error);
    CHECK_THROWS_AS(parse_long("7x"), config_error);
}
