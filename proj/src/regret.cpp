#include "nego/regret.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

#include "nego/errors.hpp"

namespace nego {

bool lex_less(const Allocation& a, const Allocation& b) {
    return std::lexicographical_compare(a.shares.begin(), a.shares.end(), b.shares.begin(), b.shares.end());
}

// Totals are folded back to front everywhere so that both search methods and
// the table reconstruction compare bit-identical sums.
double value_of(const Allocation& a, std::span<const StepUtility> utilities) {
    if (a.shares.size() != utilities.size()) throw domain_error("allocation size does not match WM count");
    double acc = 0;
    for (std::size_t i = utilities.size(); i-- > 0;) acc = utilities[i].value_at(a.shares[i]) + acc;
    return acc;
}

namespace {

// One claimable plateau of a step utility: `value` is reachable from `cost`
// units up. Menus keep only the cheapest entry per distinct value, sorted by
// cost, so cost and value both increase strictly.
struct Level {
    int cost;
    double value;
};

std::vector<Level> level_menu(const StepUtility& u, int budget) {
    std::vector<Level> menu;
    menu.push_back({0, u.level_value(0)});
    for (std::size_t t = 1; t < u.level_count(); ++t) {
        int cost = u.breakpoint(t - 1) + 1;
        if (cost > budget) break;
        double v = u.level_value(t);
        if (v > menu.back().value) menu.push_back({cost, v});
    }
    return menu;
}

StepOptimum solve_by_table(const std::vector<std::vector<Level>>& menus, int budget) {
    std::size_t n = menus.size();
    std::vector<std::vector<double>> suffix(n + 1, std::vector<double>(budget + 1, 0.0));
    for (std::size_t i = n; i-- > 0;) {
        for (int b = 0; b <= budget; ++b) {
            double best = -std::numeric_limits<double>::infinity();
            for (const Level& lvl : menus[i]) {
                if (lvl.cost > b) break;
                best = std::max(best, lvl.value + suffix[i + 1][b - lvl.cost]);
            }
            suffix[i][b] = best;
        }
    }
    Allocation pick;
    pick.shares.assign(n, 0);
    int b = budget;
    for (std::size_t i = 0; i < n; ++i) {
        for (const Level& lvl : menus[i]) {
            if (lvl.cost > b) break;
            if (lvl.value + suffix[i + 1][b - lvl.cost] == suffix[i][b]) {
                pick.shares[i] = lvl.cost;
                b -= lvl.cost;
                break;
            }
        }
    }
    return {suffix[0][budget], pick};
}

class BranchSolver {
public:
    BranchSolver(const std::vector<std::vector<Level>>& menus, int budget) : menus_(menus), budget_(budget) {
        double scale = 0;
        for (const auto& m : menus_) scale += m.back().value - std::min(0.0, m.front().value);
        // Margin covering how far the running left-to-right bound can drift
        // from the back-to-front leaf total; pruning must never cut a leaf
        // that would tie or beat the incumbent.
        slack_ = 1e-12 + 1e-15 * static_cast<double>(menus_.size() + 1) * scale;
        pick_.assign(menus_.size(), 0);
    }

    StepOptimum run() {
        descend(0, budget_, 0.0);
        Allocation out;
        out.shares.resize(menus_.size());
        for (std::size_t i = 0; i < menus_.size(); ++i) out.shares[i] = menus_[i][best_pick_[i]].cost;
        return {best_, out};
    }

private:
    double best_at_cost(std::size_t i, int b) const {
        const auto& m = menus_[i];
        std::size_t lo = 0, hi = m.size();
        while (lo + 1 < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (m[mid].cost <= b) lo = mid;
            else hi = mid;
        }
        return m[lo].value;
    }

    double tail_bound(std::size_t i, int b) const {
        double s = 0;
        for (std::size_t j = i; j < menus_.size(); ++j) s += best_at_cost(j, b);
        return s;
    }

    double leaf_total() const {
        double acc = 0;
        for (std::size_t i = menus_.size(); i-- > 0;) acc = menus_[i][pick_[i]].value + acc;
        return acc;
    }

    void descend(std::size_t i, int b, double acc) {
        if (i == menus_.size()) {
            double total = leaf_total();
            if (total > best_) {
                best_ = total;
                best_pick_ = pick_;
            }
            return;
        }
        for (std::size_t t = 0; t < menus_[i].size(); ++t) {
            const Level& lvl = menus_[i][t];
            if (lvl.cost > b) break;
            double optimistic = acc + lvl.value + tail_bound(i + 1, b - lvl.cost);
            if (optimistic < best_ - slack_) continue;
            pick_[i] = t;
            descend(i + 1, b - lvl.cost, acc + lvl.value);
        }
        pick_[i] = 0;
    }

    const std::vector<std::vector<Level>>& menus_;
    int budget_;
    double slack_;
    double best_ = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> pick_;
    std::vector<std::size_t> best_pick_;
};

// Budget above which the per-unit table gets slower than branch and bound.
constexpr int kTableBudgetLimit = 2048;

void check_subject(std::span<const SampleSet> samples, const Allocation& subject) {
    if (samples.empty()) throw domain_error("no sample sets");
    if (subject.shares.size() != samples.size()) throw domain_error("allocation size does not match WM count");
    long total = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        int s = subject.shares[i];
        if (s < 0 || s > samples[i].saturation())
            throw domain_error("subject share outside the sampled range of wm '" + samples[i].wm_id() + "'");
        total += s;
    }
    if (total > samples[0].grid().resolution) throw domain_error("allocation exceeds the resource");
}

std::vector<StepUtility> adversary_for(std::span<const SampleSet> samples, const Allocation& subject) {
    std::vector<StepUtility> advs;
    advs.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) advs.push_back(samples[i].adversarial_utility(subject.shares[i]));
    return advs;
}

} // namespace

StepOptimum maximize_step_sum(std::span<const StepUtility> utilities, int budget, SearchMethod method) {
    if (utilities.empty()) throw domain_error("no utilities");
    if (budget < 0) throw domain_error("negative budget");
    std::vector<std::vector<Level>> menus;
    menus.reserve(utilities.size());
    for (const StepUtility& u : utilities) menus.push_back(level_menu(u, budget));
    if (method == SearchMethod::kAuto)
        method = budget <= kTableBudgetLimit ? SearchMethod::kDynamicProgram : SearchMethod::kBranchAndBound;
    if (method == SearchMethod::kDynamicProgram) return solve_by_table(menus, budget);
    return BranchSolver(menus, budget).run();
}

double pairwise_max_regret(std::span<const SampleSet> samples, const Allocation& subject, const Allocation& rival) {
    check_subject(samples, subject);
    if (rival.shares.size() != samples.size()) throw domain_error("allocation size does not match WM count");
    long total = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (rival.shares[i] < 0) throw domain_error("negative share");
        total += rival.shares[i];
    }
    if (total > samples[0].grid().resolution) throw domain_error("allocation exceeds the resource");
    std::vector<StepUtility> advs = adversary_for(samples, subject);
    return value_of(rival, advs) - value_of(subject, advs);
}

RegretCertificate max_regret(std::span<const SampleSet> samples, const Allocation& subject, SearchMethod method) {
    check_subject(samples, subject);
    std::vector<StepUtility> advs = adversary_for(samples, subject);
    StepOptimum top = maximize_step_sum(advs, samples[0].grid().resolution, method);
    RegretCertificate cert;
    cert.regret = std::max(0.0, top.value - value_of(subject, advs));
    cert.subject = subject;
    cert.witness = std::move(top.choice);
    cert.adversary = std::move(advs);
    return cert;
}

namespace {

double coarse_best(const std::vector<StepUtility>& advs, std::size_t i, int b, int stride) {
    if (i == advs.size()) return 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int u = 0; u <= b; u += stride) best = std::max(best, advs[i].value_at(u) + coarse_best(advs, i + 1, b - u, stride));
    return best;
}

} // namespace

double oracle_max_regret(std::span<const SampleSet> samples, const Allocation& subject, int coarse_resolution) {
    check_subject(samples, subject);
    if (samples.size() > 3) throw domain_error("coarse check handles at most 3 WMs");
    if (coarse_resolution < 1 || coarse_resolution > 200) throw domain_error("coarse resolution must be in [1, 200]");
    int resolution = samples[0].grid().resolution;
    if (resolution % coarse_resolution != 0) throw domain_error("coarse resolution must divide the grid");
    int stride = resolution / coarse_resolution;
    std::vector<StepUtility> advs = adversary_for(samples, subject);
    double best = coarse_best(advs, 0, resolution, stride);
    return std::max(0.0, best - value_of(subject, advs));
}

} // namespace nego
