#pragma once

#include <span>
#include <string>
#include <vector>

#include "nego/grid.hpp"

namespace nego {

/// Monotone right-closed step function on grid shares. Breakpoints are pairs
/// (x_t, v_t) with x_0 = 0 and strictly increasing x; the function takes the
/// value v_0 at 0, v_t on (x_{t-1}, x_t], and stays at v_back beyond x_back.
/// This is how adversarial utility choices and envelopes are materialized.
class StepUtility {
public:
    StepUtility(std::vector<int> xs, std::vector<double> vs);

    double value_at(int units) const;

    std::size_t level_count() const { return xs_.size(); }
    int breakpoint(std::size_t t) const { return xs_[t]; }
    double level_value(std::size_t t) const { return vs_[t]; }

private:
    std::vector<int> xs_;
    std::vector<double> vs_;
};

/// One uncertainty interval between consecutive sampled thresholds:
/// utility on (lo, hi] is known only to lie within [u_lo, u_hi].
struct Bin {
    int index = 0; // 1-based
    int lo = 0;
    int hi = 0;
    double u_lo = 0;
    double u_hi = 0;

    int width() const { return hi - lo; }
    double gap() const { return u_hi - u_lo; }
};

struct BinLookup {
    int index = 0; // bin whose closure contains the point; thresholds map to their own index
    bool at_threshold = false;
};

/// Everything the provisioner knows about one WM's utility curve: sampled
/// points 0 = t^0 < ... < t^k = saturation with nondecreasing utilities.
/// Utility is flat beyond the saturation share. Immutable; adding a sample
/// produces a new set.
class SampleSet {
public:
    SampleSet(std::string wm_id, Grid grid, std::vector<int> thresholds, std::vector<double> values);

    const std::string& wm_id() const { return wm_id_; }
    const Grid& grid() const { return grid_; }

    int saturation() const { return thresholds_.back(); }
    std::size_t sample_count() const { return thresholds_.size(); }
    int bin_count() const { return static_cast<int>(thresholds_.size()) - 1; }

    const std::vector<int>& thresholds() const { return thresholds_; }
    const std::vector<double>& values() const { return values_; }

    Bin bin(int index) const;

    /// Index of the bin containing `units`; points beyond saturation are a
    /// domain error, thresholds report at_threshold (threshold t^j -> index j).
    BinLookup bin_index(int units) const;

    bool is_sampled(int units) const;

    /// Tightest bounds on u(units) consistent with the samples; defined on the
    /// whole grid (flat at the last sampled value beyond saturation).
    double lower(int units) const;
    double upper(int units) const;

    /// The regret adversary for a subject holding `units`: lower bound up to
    /// `units` inside its bin, upper bound above, all other bins at their
    /// upper bounds. At a sampled point below saturation this is the full
    /// upper envelope; at saturation the last bin's interior stays at its
    /// lower bound (the limit of the interior case).
    StepUtility adversarial_utility(int units) const;

    StepUtility upper_envelope() const;

    /// add_sample: returns a copy extended with (units, utility). Re-sampling
    /// a known point with a matching value is a no-op; contradictions and
    /// points outside [0, saturation] are errors.
    SampleSet with_sample(int units, double utility) const;

private:
    std::string wm_id_;
    Grid grid_;
    std::vector<int> thresholds_;
    std::vector<double> values_;
};

/// Largest utility bin gap across all WMs; the spread that bounds how far any
/// allocation's worst case can be from optimal.
double epsilon_max(std::span<const SampleSet> samples);

} // namespace nego
