#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nego/elicitation.hpp"
#include "nego/io.hpp"

namespace nego {

struct SyntheticWmSpec {
    std::string wm_id;
    SyntheticWm curve;
    bool full_saturation = false; // advertise the whole resource as saturation
};

struct TabulatedSpec {
    std::string wm_id;
    std::vector<int> shares;
    std::vector<double> utilities;
};

using WmSpec = std::variant<WmModel, SyntheticWmSpec, TabulatedSpec>;

std::unique_ptr<UtilityOracle> make_oracle(const WmSpec& spec, Grid grid);

struct ExperimentConfig {
    Grid grid;
    std::vector<WmSpec> wm_specs;
    std::vector<Strategy> strategies;
    std::vector<std::uint64_t> seeds;
    int max_rounds = 15;
    double regret_threshold = 0;
    SolveOptions solver{SolveMode::kApprox, 3, true, 0, SearchMethod::kAuto};
    std::string output; // default output directory; may be empty
};

/// Key-value text: top-level `grid`, `rounds`, `threshold`, `mode`,
/// `extensions`, `pruning`, `search`, `seeds`, `strategies`, `output`, and
/// one `wm <kind> <id>` section per WM (kinds: model, near-step,
/// random-monotone, tabulated) with kind-specific keys.
ExperimentConfig parse_experiment_config(std::istream& in);

struct RunRecord {
    int run_id = 0;
    std::uint64_t seed = 0;
    std::string strategy;
    int round = 0;
    long queries_per_wm = 0;
    double mmr = 0;
    std::vector<int> alloc;
    double solve_ms = 0;
    long prunes = 0;

    bool operator==(const RunRecord&) const = default;
};

/// One negotiation per (strategy, seed) pair against fresh oracles, one
/// record per round, in canonical (run_id, round) order. Deterministic apart
/// from the solve_ms wall times.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

void write_csv(std::ostream& out, std::span<const RunRecord> records);
std::vector<RunRecord> read_csv(std::istream& in);

struct PlotPoint {
    long queries_per_wm = 0;
    double mean_mmr = 0;
    double min_mmr = 0;
    double max_mmr = 0;
};

struct PlotSeries {
    std::string strategy;
    std::vector<PlotPoint> points;
};

/// Per-strategy regret curves: mean/min/max of mmr over runs, grouped by
/// queries_per_wm, points in ascending query order.
std::vector<PlotSeries> aggregate_by_strategy(std::span<const RunRecord> records);

/// Writes `<strategy>.dat` per series into `dir` (columns: queries_per_wm,
/// mean, min, max), plus a `<strategy>.logready.dat` copy for plot pipelines
/// that bind one file per axis configuration (values identical; the log axis
/// is the consumer's).
void emit_plot_data(const std::filesystem::path& dir, std::span<const PlotSeries> series);

} // namespace nego
