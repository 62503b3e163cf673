#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nego/regret.hpp"

namespace nego {

/// An allocation that sits on a sampled threshold of every WM: level[i] is
/// the threshold rank, shares[i] the threshold itself.
struct PinnedAllocation {
    std::vector<int> level;
    std::vector<int> shares;
    long total = 0;

    Allocation to_allocation() const { return Allocation{shares}; }
    bool operator==(const PinnedAllocation&) const = default;
};

/// `pinned` is `a` with every share rounded down to a sampled threshold;
/// `surplus` is the total units the rounding freed.
struct SnapResult {
    PinnedAllocation pinned;
    int surplus = 0;
};

SnapResult snap_to_thresholds(std::span<const SampleSet> samples, const Allocation& a);

/// Streams threshold-pinned allocations in lexicographic share order. By
/// default only maximal ones (no WM can step up to its next threshold within
/// the resource); with maximal_only = false, every feasible pinned
/// combination. The full stream matters for exact solves: holding a WM just
/// below its next threshold raises a rival's buy-in there by a grid unit, so
/// optima can hide behind extendable pins.
class PinnedFrontier {
public:
    explicit PinnedFrontier(std::span<const SampleSet> samples, bool maximal_only = true);

    bool next(PinnedAllocation& out);

private:
    void bump(std::size_t pos);

    std::vector<std::vector<int>> thresholds_;
    std::vector<std::size_t> idx_;
    long budget_;
    bool maximal_only_;
    bool exhausted_ = false;
};

enum class SolveMode {
    kExact,  // per frontier point, minimize regret over its extensions exactly
    kApprox, // per frontier point, sample a few extensions and keep the best
};

struct SolveOptions {
    SolveMode mode = SolveMode::kExact;
    int extension_samples = 3; // random extensions per frontier point (approx)
    bool pruning = true;       // skip frontier points the incumbent's witness already beats
    std::uint64_t seed = 0;    // drives the approx extension draws
    SearchMethod search = SearchMethod::kAuto;
};

struct SolveStats {
    long frontier_seen = 0;
    long frontier_pruned = 0;
    long frontier_expanded = 0;
    long regret_evals = 0; // full max-regret certificates computed
    long bound_evals = 0;  // cheap frontier lower bounds computed
};

struct MmrResult {
    Allocation allocation;
    double regret = 0;
    RegretCertificate certificate;
    PinnedAllocation base; // the pinned allocation it extends
    int refine_steps = 0;  // witness-guided redistribution rounds taken
};

/// One row per frontier point visited by minimax_allocation.
struct TraceRow {
    PinnedAllocation base;
    double lower_bound = 0; // NaN when not computed
    bool pruned = false;
    double regret = 0; // NaN when pruned
};

/// Minimize max regret over the extensions of one pinned allocation: raise
/// shares strictly inside their current bins, placing as many spare units as
/// the bins can hold. Exact: witness-guided refinement seeds the answer, a
/// full sweep of the placements guarantees it.
MmrResult mmr_over_extensions(std::span<const SampleSet> samples, const PinnedAllocation& base,
                              SearchMethod search = SearchMethod::kAuto, SolveStats* stats = nullptr);

/// Minimax-regret allocation over the whole feasible set. Exact mode walks
/// every pinned allocation and minimizes over each one's extensions; approx
/// mode walks only the maximal pins and samples a few extensions per pin.
/// Either way the returned regret is the true max regret of the returned
/// allocation. Regret ties prefer more fully allocated results, then the
/// lexicographically smaller one. Pruning does not change the result.
MmrResult minimax_allocation(std::span<const SampleSet> samples, const SolveOptions& options = {},
                             SolveStats* stats = nullptr, std::vector<TraceRow>* trace = nullptr);

/// Best allocation if every WM's utility sits at its upper bound; spare units
/// are padded onto the claimed plateaus from the last WM backwards.
Allocation optimistic_allocation(std::span<const SampleSet> samples);

/// Step WMs up their sampled thresholds by best known utility slope per unit
/// until nothing fits. Lands on the pinned frontier.
PinnedAllocation greedy_pinned_allocation(std::span<const SampleSet> samples);

} // namespace nego
