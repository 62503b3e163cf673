#include "nego/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>

#include "nego/errors.hpp"

namespace nego {

std::unique_ptr<UtilityOracle> make_oracle(const WmSpec& spec, Grid grid) {
    if (const auto* model = std::get_if<WmModel>(&spec)) return std::make_unique<ModelOracle>(*model, grid);
    if (const auto* synth = std::get_if<SyntheticWmSpec>(&spec))
        return std::make_unique<SyntheticOracle>(synth->wm_id, synth->curve, grid, synth->full_saturation);
    const auto& tab = std::get<TabulatedSpec>(spec);
    return std::make_unique<TabulatedOracle>(tab.wm_id, grid, tab.shares, tab.utilities);
}

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
    throw config_error("line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> tokenize(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) {
        if (tok.front() == '#') break;
        tokens.push_back(tok);
    }
    return tokens;
}

bool parse_switch(const std::string& value, int line) {
    if (value == "on") return true;
    if (value == "off") return false;
    fail(line, "expected on|off, got '" + value + "'");
}

SearchMethod parse_search(const std::string& value, int line) {
    if (value == "auto") return SearchMethod::kAuto;
    if (value == "table") return SearchMethod::kDynamicProgram;
    if (value == "branch") return SearchMethod::kBranchAndBound;
    fail(line, "expected auto|table|branch, got '" + value + "'");
}

// Per-WM section parser state.
struct WmSection {
    std::string kind;
    std::string id;
    int line = 0;
    WmModel model;
    NearStepSpec step;
    RandomMonotoneSpec mono;
    bool full_saturation = false;
    TabulatedSpec table;
};

WmSpec finish_wm(const WmSection& w) {
    if (w.kind == "model") {
        if (w.model.classes.empty()) fail(w.line, "wm '" + w.id + "': model needs at least one class");
        WmModel m = w.model;
        m.wm_id = w.id;
        return m;
    }
    if (w.kind == "near-step") return SyntheticWmSpec{w.id, w.step, w.full_saturation};
    if (w.kind == "random-monotone") return SyntheticWmSpec{w.id, w.mono, w.full_saturation};
    if (w.table.shares.empty()) fail(w.line, "wm '" + w.id + "': tabulated needs at least one point");
    TabulatedSpec t = w.table;
    t.wm_id = w.id;
    return t;
}

} // namespace

ExperimentConfig parse_experiment_config(std::istream& in) {
    ExperimentConfig config;
    std::optional<WmSection> wm;
    int line_no = 0;
    std::string line;

    auto flush_wm = [&] {
        if (wm) config.wm_specs.push_back(finish_wm(*wm));
        wm.reset();
    };

    while (std::getline(in, line)) {
        ++line_no;
        std::vector<std::string> tok = tokenize(line);
        if (tok.empty()) continue;
        const std::string& key = tok[0];
        auto one = [&]() -> const std::string& {
            if (tok.size() != 2) fail(line_no, "'" + key + "' takes one value");
            return tok[1];
        };
        if (key == "wm") {
            if (tok.size() != 3) fail(line_no, "expected 'wm <kind> <id>'");
            flush_wm();
            if (tok[1] != "model" && tok[1] != "near-step" && tok[1] != "random-monotone" && tok[1] != "tabulated")
                fail(line_no, "unknown wm kind '" + tok[1] + "'");
            wm.emplace();
            wm->kind = tok[1];
            wm->id = tok[2];
            wm->line = line_no;
        } else if (wm && wm->kind == "model") {
            if (key == "capacity") wm->model.capacity_rate = parse_double(one());
            else if (key == "split-grid") wm->model.split_grid = static_cast<int>(parse_long(one()));
            else if (key == "class") {
                TransactionClass tc;
                if (tok.size() != 9) fail(line_no, "expected 'class arrival A payment P response R width W'");
                for (std::size_t t = 1; t < tok.size(); t += 2) {
                    double v = parse_double(tok[t + 1]);
                    if (tok[t] == "arrival") tc.arrival_rate = v;
                    else if (tok[t] == "payment") tc.contract.payment = v;
                    else if (tok[t] == "response") tc.contract.response_threshold = v;
                    else if (tok[t] == "width") tc.contract.smoothing_width = v;
                    else fail(line_no, "unknown class field '" + tok[t] + "'");
                }
                wm->model.classes.push_back(tc);
            } else fail(line_no, "wm '" + wm->id + "': unknown key '" + key + "'");
        } else if (wm && wm->kind == "near-step") {
            if (key == "jump") wm->step.jump = parse_double(one());
            else if (key == "plateau") wm->step.plateau = parse_double(one());
            else if (key == "ramp") wm->step.ramp = parse_double(one());
            else if (key == "full-saturation") wm->full_saturation = parse_switch(one(), line_no);
            else fail(line_no, "wm '" + wm->id + "': unknown key '" + key + "'");
        } else if (wm && wm->kind == "random-monotone") {
            if (key == "seed") wm->mono.seed = static_cast<std::uint64_t>(parse_long(one()));
            else if (key == "knots") wm->mono.knots = static_cast<int>(parse_long(one()));
            else if (key == "scale") wm->mono.scale = parse_double(one());
            else if (key == "full-saturation") wm->full_saturation = parse_switch(one(), line_no);
            else fail(line_no, "wm '" + wm->id + "': unknown key '" + key + "'");
        } else if (wm && wm->kind == "tabulated") {
            if (key == "point") {
                if (tok.size() != 3) fail(line_no, "expected 'point <share> <utility>'");
                wm->table.shares.push_back(static_cast<int>(parse_long(tok[1])));
                wm->table.utilities.push_back(parse_double(tok[2]));
            } else fail(line_no, "wm '" + wm->id + "': unknown key '" + key + "'");
        } else if (key == "grid") {
            config.grid.resolution = static_cast<int>(parse_long(one()));
        } else if (key == "rounds") {
            config.max_rounds = static_cast<int>(parse_long(one()));
        } else if (key == "threshold") {
            config.regret_threshold = parse_double(one());
        } else if (key == "mode") {
            const std::string& v = one();
            if (v == "exact") config.solver.mode = SolveMode::kExact;
            else if (v == "approx") config.solver.mode = SolveMode::kApprox;
            else fail(line_no, "expected exact|approx, got '" + v + "'");
        } else if (key == "extensions") {
            config.solver.extension_samples = static_cast<int>(parse_long(one()));
        } else if (key == "pruning") {
            config.solver.pruning = parse_switch(one(), line_no);
        } else if (key == "search") {
            config.solver.search = parse_search(one(), line_no);
        } else if (key == "seeds") {
            if (tok.size() < 2) fail(line_no, "'seeds' needs at least one value");
            for (std::size_t t = 1; t < tok.size(); ++t)
                config.seeds.push_back(static_cast<std::uint64_t>(parse_long(tok[t])));
        } else if (key == "strategies") {
            if (tok.size() < 2) fail(line_no, "'strategies' needs at least one value");
            for (std::size_t t = 1; t < tok.size(); ++t) config.strategies.push_back(strategy_from_string(tok[t]));
        } else if (key == "output") {
            config.output = one();
        } else {
            fail(line_no, "unknown key '" + key + "'");
        }
    }
    flush_wm();

    if (config.grid.resolution < 100) throw config_error("grid: need a resolution of at least 100");
    if (config.wm_specs.empty()) throw config_error("no WMs configured");
    if (config.seeds.empty()) throw config_error("seeds: need at least one");
    if (config.strategies.empty())
        config.strategies = {Strategy::kHeuristicSplit, Strategy::kRandom, Strategy::kHalveAll};
    if (config.max_rounds < 1) throw config_error("rounds: need at least one");
    if (config.regret_threshold < 0) throw config_error("threshold: must be nonnegative");
    if (config.solver.extension_samples < 0) throw config_error("extensions: must be nonnegative");
    return config;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
    if (config.wm_specs.empty()) throw config_error("no WMs configured");
    if (config.seeds.empty()) throw config_error("seeds: need at least one");
    if (config.strategies.empty()) throw config_error("strategies: need at least one");
    std::vector<RunRecord> rows;
    int run_id = 0;
    for (Strategy strategy : config.strategies) {
        for (std::uint64_t seed : config.seeds) {
            std::vector<std::unique_ptr<UtilityOracle>> oracles;
            std::vector<UtilityOracle*> raw;
            for (const WmSpec& spec : config.wm_specs) {
                oracles.push_back(make_oracle(spec, config.grid));
                raw.push_back(oracles.back().get());
            }
            NegotiationConfig nc;
            nc.strategy = strategy;
            nc.regret_threshold = config.regret_threshold;
            nc.max_rounds = config.max_rounds;
            nc.seed = seed;
            nc.solver = config.solver;
            NegotiationResult res = run_negotiation(raw, nc);
            for (const RoundRecord& r : res.trace)
                rows.push_back({run_id, seed, to_string(strategy), r.round, r.queries_per_wm, r.mmr,
                                r.allocation.shares, r.solve_ms, r.prunes});
            ++run_id;
        }
    }
    return rows;
}

void write_csv(std::ostream& out, std::span<const RunRecord> records) {
    if (records.empty()) throw domain_error("no records to write");
    std::size_t n = records[0].alloc.size();
    out << "run_id,seed,strategy,round,queries_per_wm,mmr";
    for (std::size_t i = 0; i < n; ++i) out << ",alloc_" << i;
    out << ",solve_ms,prunes\n";
    for (const RunRecord& r : records) {
        if (r.alloc.size() != n) throw domain_error("records disagree on WM count");
        out << r.run_id << "," << r.seed << "," << r.strategy << "," << r.round << "," << r.queries_per_wm << ","
            << format_double(r.mmr);
        for (int share : r.alloc) out << "," << share;
        out << "," << format_double(r.solve_ms) << "," << r.prunes << "\n";
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace

std::vector<RunRecord> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw config_error("empty CSV");
    std::vector<std::string> header = split_csv(line);
    std::size_t n = 0;
    for (const std::string& h : header)
        if (h.rfind("alloc_", 0) == 0) ++n;
    std::vector<std::string> expected{"run_id", "seed", "strategy", "round", "queries_per_wm", "mmr"};
    for (std::size_t i = 0; i < n; ++i) expected.push_back("alloc_" + std::to_string(i));
    expected.push_back("solve_ms");
    expected.push_back("prunes");
    if (header != expected) throw config_error("unexpected CSV header");

    std::vector<RunRecord> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f = split_csv(line);
        if (f.size() != expected.size()) fail(line_no, "wrong field count");
        RunRecord r;
        r.run_id = static_cast<int>(parse_long(f[0]));
        r.seed = static_cast<std::uint64_t>(parse_long(f[1]));
        r.strategy = f[2];
        r.round = static_cast<int>(parse_long(f[3]));
        r.queries_per_wm = parse_long(f[4]);
        r.mmr = parse_double(f[5]);
        for (std::size_t i = 0; i < n; ++i) r.alloc.push_back(static_cast<int>(parse_long(f[6 + i])));
        r.solve_ms = parse_double(f[6 + n]);
        r.prunes = parse_long(f[7 + n]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<PlotSeries> aggregate_by_strategy(std::span<const RunRecord> records) {
    if (records.empty()) throw domain_error("no records to aggregate");
    std::vector<std::string> order;
    std::map<std::string, std::map<long, std::vector<double>>> groups;
    for (const RunRecord& r : records) {
        if (groups.find(r.strategy) == groups.end()) order.push_back(r.strategy);
        groups[r.strategy][r.queries_per_wm].push_back(r.mmr);
    }
    std::vector<PlotSeries> series;
    for (const std::string& strategy : order) {
        PlotSeries s;
        s.strategy = strategy;
        for (const auto& [q, values] : groups[strategy]) {
            PlotPoint p;
            p.queries_per_wm = q;
            p.min_mmr = *std::min_element(values.begin(), values.end());
            p.max_mmr = *std::max_element(values.begin(), values.end());
            double sum = 0;
            for (double v : values) sum += v;
            p.mean_mmr = sum / static_cast<double>(values.size());
            s.points.push_back(p);
        }
        series.push_back(std::move(s));
    }
    return series;
}

void emit_plot_data(const std::filesystem::path& dir, std::span<const PlotSeries> series) {
    if (series.empty()) throw domain_error("no series to emit");
    std::filesystem::create_directories(dir);
    for (const PlotSeries& s : series) {
        std::ostringstream body;
        body << "# queries_per_wm mean_mmr min_mmr max_mmr\n";
        for (const PlotPoint& p : s.points)
            body << p.queries_per_wm << " " << format_double(p.mean_mmr) << " " << format_double(p.min_mmr) << " "
                 << format_double(p.max_mmr) << "\n";
        for (const char* suffix : {".dat", ".logready.dat"}) {
            std::ofstream out(dir / (s.strategy + suffix));
            if (!out) throw config_error("cannot write plot data under '" + dir.string() + "'");
            out << body.str();
        }
    }
}

} // namespace nego
