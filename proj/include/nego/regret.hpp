#pragma once

#include <span>
#include <vector>

#include "nego/sample_set.hpp"

namespace nego {

/// Grid shares per WM, same order as the sample sets. Feasible when every
/// share is on the grid and they sum to at most the whole resource.
struct Allocation {
    std::vector<int> shares;

    bool operator==(const Allocation&) const = default;
};

/// Lexicographic order; the canonical tie-break everywhere a single winner
/// must be picked among equally good allocations.
bool lex_less(const Allocation& a, const Allocation& b);

double value_of(const Allocation& a, std::span<const StepUtility> utilities);

/// Largest advantage a rival allocation can get over `subject` across all
/// utilities consistent with the samples. May be negative.
double pairwise_max_regret(std::span<const SampleSet> samples, const Allocation& subject, const Allocation& rival);

/// Worst-case loss of `subject`, with the rival allocation and the utility
/// functions achieving it.
struct RegretCertificate {
    double regret = 0;
    Allocation subject;
    Allocation witness;
    std::vector<StepUtility> adversary;
};

enum class SearchMethod {
    kAuto,          // pick by grid size
    kDynamicProgram,
    kBranchAndBound,
};

/// Max regret of `subject` over all consistent utilities and rival
/// allocations. The witness is the lexicographically smallest maximizer,
/// written with minimal shares (each share the cheapest point of the utility
/// level it claims). Both search methods return identical certificates.
///
/// Requires each share within the WM's sampled range [0, saturation].
RegretCertificate max_regret(std::span<const SampleSet> samples, const Allocation& subject,
                             SearchMethod method = SearchMethod::kAuto);

/// Best total of step utilities over allocations of at most `budget` units,
/// with the lexicographically smallest minimal-share maximizer.
struct StepOptimum {
    double value;
    Allocation choice;
};

StepOptimum maximize_step_sum(std::span<const StepUtility> utilities, int budget,
                              SearchMethod method = SearchMethod::kAuto);

/// Slow independent check: enumerates rival allocations on a coarse grid
/// (every `stride = resolution / coarse_resolution` units) instead of
/// searching utility levels. Exact when the stride is 1. Guarded to tiny
/// instances; test use only.
double oracle_max_regret(std::span<const SampleSet> samples, const Allocation& subject, int coarse_resolution);

} // namespace nego
