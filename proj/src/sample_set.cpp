#include "nego/sample_set.hpp"

#include <algorithm>
#include <cassert>

namespace nego {

StepUtility::StepUtility(std::vector<int> xs, std::vector<double> vs)
    : xs_(std::move(xs)), vs_(std::move(vs)) {
    assert(!xs_.empty() && xs_.size() == vs_.size());
    assert(xs_.front() == 0);
    assert(std::is_sorted(xs_.begin(), xs_.end()));
}

double StepUtility::value_at(int units) const {
    if (units <= 0) return vs_.front();
    auto it = std::lower_bound(xs_.begin(), xs_.end(), units);
    if (it == xs_.end()) return vs_.back();
    return vs_[static_cast<std::size_t>(it - xs_.begin())];
}

SampleSet::SampleSet(std::string wm_id, Grid grid, std::vector<int> thresholds,
                     std::vector<double> values)
    : wm_id_(std::move(wm_id)), grid_(grid), thresholds_(std::move(thresholds)),
      values_(std::move(values)) {
    if (thresholds_.empty() || thresholds_.size() != values_.size())
        throw domain_error("sample set needs matching, non-empty thresholds and values");
    if (thresholds_.front() != 0)
        throw domain_error("first sample must be at share 0");
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
        if (!grid_.valid(thresholds_[i]))
            throw domain_error("sample threshold off the grid");
        if (i > 0 && thresholds_[i] <= thresholds_[i - 1])
            throw domain_error("sample thresholds must be strictly increasing");
        if (i > 0 && values_[i] < values_[i - 1] - kUtilityTol)
            throw consistency_error(wm_id_, "sampled utilities must be nondecreasing");
    }
}

Bin SampleSet::bin(int index) const {
    if (index < 1 || index > bin_count())
        throw domain_error("bin index out of range");
    auto i = static_cast<std::size_t>(index);
    return Bin{index, thresholds_[i - 1], thresholds_[i], values_[i - 1], values_[i]};
}

BinLookup SampleSet::bin_index(int units) const {
    if (units < 0 || units > saturation())
        throw domain_error("share outside [0, saturation]");
    auto it = std::lower_bound(thresholds_.begin(), thresholds_.end(), units);
    auto j = static_cast<int>(it - thresholds_.begin());
    return BinLookup{j, *it == units};
}

bool SampleSet::is_sampled(int units) const {
    return std::binary_search(thresholds_.begin(), thresholds_.end(), units);
}

double SampleSet::lower(int units) const {
    if (units < 0) throw domain_error("negative share");
    // greatest sampled point <= units
    auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(), units);
    assert(it != thresholds_.begin());
    return values_[static_cast<std::size_t>(it - thresholds_.begin()) - 1];
}

double SampleSet::upper(int units) const {
    if (units < 0) throw domain_error("negative share");
    auto it = std::lower_bound(thresholds_.begin(), thresholds_.end(), units);
    if (it == thresholds_.end()) return values_.back(); // flat beyond saturation
    return values_[static_cast<std::size_t>(it - thresholds_.begin())];
}

StepUtility SampleSet::adversarial_utility(int units) const {
    auto [j, at_threshold] = bin_index(units);
    if (at_threshold && units == saturation() && thresholds_.size() >= 2) {
        // Subject holds the saturation point itself. The last bin's interior
        // stays at that bin's lower bound (the limit of the interior case as
        // the subject approaches saturation); every earlier bin stays maximal.
        std::vector<int> xs(thresholds_.begin(), thresholds_.end() - 1);
        std::vector<double> vs(values_.begin(), values_.end() - 1);
        if (xs.back() != units - 1) {
            xs.push_back(units - 1);
            vs.push_back(vs.back());
        }
        xs.push_back(units);
        vs.push_back(values_.back());
        return StepUtility(std::move(xs), std::move(vs));
    }
    if (at_threshold) return upper_envelope();
    // Interior of bin j: concede only the lower bound up to `units`, jump to
    // the bin's upper bound just above it, and keep every other bin maximal.
    std::vector<int> xs;
    std::vector<double> vs;
    xs.reserve(thresholds_.size() + 1);
    vs.reserve(values_.size() + 1);
    for (int t = 0; t < j; ++t) {
        xs.push_back(thresholds_[static_cast<std::size_t>(t)]);
        vs.push_back(values_[static_cast<std::size_t>(t)]);
    }
    xs.push_back(units);
    vs.push_back(values_[static_cast<std::size_t>(j) - 1]);
    for (std::size_t t = static_cast<std::size_t>(j); t < thresholds_.size(); ++t) {
        xs.push_back(thresholds_[t]);
        vs.push_back(values_[t]);
    }
    return StepUtility(std::move(xs), std::move(vs));
}

StepUtility SampleSet::upper_envelope() const {
    return StepUtility(thresholds_, values_);
}

SampleSet SampleSet::with_sample(int units, double utility) const {
    if (units < 0 || units > saturation())
        throw domain_error("sample point outside [0, saturation]");
    if (is_sampled(units)) {
        double known = upper(units); // == lower(units) at a sampled point
        if (std::abs(known - utility) > kUtilityTol)
            throw consistency_error(wm_id_, "conflicting utility for an already sampled share");
        return *this;
    }
    if (utility < lower(units) - kUtilityTol || utility > upper(units) + kUtilityTol)
        throw consistency_error(wm_id_, "utility response outside the feasible envelope");
    auto pos = std::lower_bound(thresholds_.begin(), thresholds_.end(), units);
    auto at = static_cast<std::size_t>(pos - thresholds_.begin());
    std::vector<int> xs = thresholds_;
    std::vector<double> vs = values_;
    xs.insert(xs.begin() + static_cast<std::ptrdiff_t>(at), units);
    vs.insert(vs.begin() + static_cast<std::ptrdiff_t>(at), utility);
    return SampleSet(wm_id_, grid_, std::move(xs), std::move(vs));
}

double epsilon_max(std::span<const SampleSet> samples) {
    if (samples.empty()) throw domain_error("epsilon_max over an empty WM list");
    double best = 0;
    for (const auto& s : samples)
        for (int j = 1; j <= s.bin_count(); ++j)
            best = std::max(best, s.bin(j).gap());
    return best;
}

} // namespace nego
