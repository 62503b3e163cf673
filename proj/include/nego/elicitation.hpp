#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nego/minimax.hpp"
#include "nego/wm_model.hpp"

namespace nego {

enum class Strategy {
    kRandom,         // a uniform unsampled point per WM
    kHalveAll,       // midpoint of each WM's widest bin
    kHeuristicSplit, // midpoint of the allocation or witness bin, whichever scores higher
};

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

/// How much resolving bin `j` could matter: utility spread relative to the
/// WM's full utility plus width relative to its saturation share. In [0, 2].
double bin_score(const SampleSet& s, int bin_index);

struct Query {
    std::size_t wm = 0;
    int share = 0;
};

/// One probe per WM under `strategy`; WMs with nothing left to ask are
/// skipped. `current` is only consulted by the heuristic-split strategy.
/// `witness_point` makes heuristic-split ask at the witness share itself
/// instead of a bin midpoint (kept for comparison runs; usually worse).
std::vector<Query> next_queries(std::span<const SampleSet> samples, const MmrResult& current, Strategy strategy,
                                std::mt19937_64& rng, bool witness_point = false);

struct RoundRecord {
    int round = 0;
    long queries_per_wm = 0; // highest per-WM oracle call count so far
    double mmr = 0;
    Allocation allocation;
    double solve_ms = 0;
    long prunes = 0;
};

/// A probe as it happened, with the envelope bounds that preceded it.
struct QueryOutcome {
    std::size_t wm = 0;
    int share = 0;
    double response = 0;
    double prior_lower = 0;
    double prior_upper = 0;
};

enum class StopReason {
    kBelowThreshold,
    kMaxRounds,
    kExhausted, // strategy found nothing left to ask
};

const char* to_string(StopReason r);

struct NegotiationConfig {
    Strategy strategy = Strategy::kHeuristicSplit;
    double regret_threshold = 0;
    int max_rounds = 50;
    std::uint64_t seed = 0;
    /// Per-round solver settings; the solver seed is derived from `seed` and
    /// the round, whatever is set here.
    SolveOptions solver{SolveMode::kApprox, 3, true, 0, SearchMethod::kAuto};
    bool witness_point = false;
    bool record_outcomes = false;
};

struct NegotiationResult {
    std::vector<SampleSet> samples;
    MmrResult final_solution;
    std::vector<RoundRecord> trace;
    StopReason reason = StopReason::kBelowThreshold;
    std::vector<std::vector<QueryOutcome>> outcomes; // per round, when recorded
};

/// Run the negotiation loop against live WMs: bootstrap each with queries at
/// 0, its saturation share and two seeded random interior points, then
/// alternate solving for a minimax allocation and asking one strategy query
/// per WM. Each round recertifies the held allocation against the grown
/// sample sets and keeps it unless the fresh solve certifies at least as
/// well, so the reported regret only rises if new information disproves the
/// incumbent's certificate. A response outside the current envelope aborts
/// with a consistency error naming the WM.
NegotiationResult run_negotiation(std::span<UtilityOracle* const> wms, const NegotiationConfig& config);

} // namespace nego
