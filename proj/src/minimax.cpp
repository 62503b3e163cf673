#include "nego/minimax.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>

#include "nego/errors.hpp"

namespace nego {

namespace {

void check_samples(std::span<const SampleSet> samples) {
    if (samples.empty()) throw domain_error("no sample sets");
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (!(samples[i].grid() == samples[0].grid())) throw domain_error("sample sets disagree on the grid");
}

int floor_threshold_rank(const SampleSet& s, int units) {
    if (units >= s.saturation()) return static_cast<int>(s.sample_count()) - 1;
    BinLookup look = s.bin_index(units);
    return look.at_threshold ? look.index : look.index - 1;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Per-WM view of the bin a pinned allocation could grow into.
struct ExtensionInfo {
    bool extendable = false;
    int next = 0;   // next sampled threshold
    int cap = 0;    // spare units that stay strictly below `next`
    double gap = 0; // utility spread of that bin
};

std::vector<ExtensionInfo> extension_info(std::span<const SampleSet> samples, const PinnedAllocation& base) {
    std::vector<ExtensionInfo> info(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::vector<int>& thr = samples[i].thresholds();
        std::size_t rank = static_cast<std::size_t>(base.level[i]);
        if (rank + 1 < thr.size()) {
            info[i].extendable = true;
            info[i].next = thr[rank + 1];
            info[i].cap = thr[rank + 1] - base.shares[i] - 1;
            info[i].gap = samples[i].values()[rank + 1] - samples[i].values()[rank];
        }
    }
    return info;
}

std::vector<std::size_t> order_by_gap(const std::vector<ExtensionInfo>& info, bool ascending) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < info.size(); ++i)
        if (info[i].extendable && info[i].cap > 0) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ascending ? info[a].gap < info[b].gap : info[a].gap > info[b].gap;
    });
    return order;
}

// Hand each WM in `order` up to its spare room until the units run out.
void pour(std::vector<int>& delta, const std::vector<ExtensionInfo>& info, std::span<const std::size_t> order,
          int units) {
    for (std::size_t i : order) {
        if (units <= 0) break;
        int add = std::min(info[i].cap - delta[i], units);
        if (add > 0) {
            delta[i] += add;
            units -= add;
        }
    }
}

void check_base(std::span<const SampleSet> samples, const PinnedAllocation& base) {
    if (base.level.size() != samples.size() || base.shares.size() != samples.size())
        throw domain_error("pinned allocation size does not match WM count");
    long total = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::vector<int>& thr = samples[i].thresholds();
        if (base.level[i] < 0 || static_cast<std::size_t>(base.level[i]) >= thr.size() ||
            thr[base.level[i]] != base.shares[i])
            throw domain_error("pinned allocation is off the sampled thresholds");
        total += base.shares[i];
    }
    if (total != base.total || total > samples[0].grid().resolution)
        throw domain_error("pinned allocation total is inconsistent");
}

long share_total(const Allocation& a) {
    long t = 0;
    for (int s : a.shares) t += s;
    return t;
}

// Shared candidate pool: regret certificates computed once per allocation,
// winner chosen by (regret, most units placed, lex) regardless of insertion
// order. Fuller allocations win ties because an idle unit never helps its
// holder and parking it inside a bin makes every rival's step there dearer.
class CandidateSet {
public:
    CandidateSet(std::span<const SampleSet> samples, SearchMethod search, SolveStats* stats)
        : samples_(samples), search_(search), stats_(stats) {}

    void add(Allocation a) {
        if (known_.insert(a.shares).second) pool_.push_back(std::move(a));
    }

    const RegretCertificate& certify(const Allocation& a) {
        auto it = certs_.find(a.shares);
        if (it == certs_.end()) {
            it = certs_.emplace(a.shares, max_regret(samples_, a, search_)).first;
            if (stats_) stats_->regret_evals++;
        }
        return it->second;
    }

    MmrResult pick_best(const PinnedAllocation& base, int refine_steps) {
        const Allocation* best = nullptr;
        const RegretCertificate* best_cert = nullptr;
        long best_total = 0;
        for (const Allocation& c : pool_) {
            const RegretCertificate& cert = certify(c);
            long total = share_total(c);
            bool tie = best && cert.regret <= best_cert->regret + kUtilityTol;
            if (!best || cert.regret < best_cert->regret - kUtilityTol ||
                (tie && (total > best_total || (total == best_total && lex_less(c, *best))))) {
                best = &c;
                best_cert = &cert;
                best_total = total;
            }
        }
        MmrResult out;
        out.allocation = *best;
        out.regret = best_cert->regret;
        out.certificate = *best_cert;
        out.base = base;
        out.refine_steps = refine_steps;
        return out;
    }

private:
    std::span<const SampleSet> samples_;
    SearchMethod search_;
    SolveStats* stats_;
    std::vector<Allocation> pool_;
    std::set<std::vector<int>> known_;
    std::map<std::vector<int>, RegretCertificate> certs_;
};

Allocation apply_delta(const PinnedAllocation& base, const std::vector<int>& delta) {
    Allocation a;
    a.shares = base.shares;
    for (std::size_t i = 0; i < delta.size(); ++i) a.shares[i] += delta[i];
    return a;
}

} // namespace

SnapResult snap_to_thresholds(std::span<const SampleSet> samples, const Allocation& a) {
    check_samples(samples);
    if (a.shares.size() != samples.size()) throw domain_error("allocation size does not match WM count");
    SnapResult out;
    out.pinned.level.resize(samples.size());
    out.pinned.shares.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (a.shares[i] < 0) throw domain_error("negative share");
        int rank = floor_threshold_rank(samples[i], a.shares[i]);
        int pin = samples[i].thresholds()[rank];
        out.pinned.level[i] = rank;
        out.pinned.shares[i] = pin;
        out.pinned.total += pin;
        out.surplus += a.shares[i] - pin;
    }
    return out;
}

PinnedFrontier::PinnedFrontier(std::span<const SampleSet> samples, bool maximal_only)
    : maximal_only_(maximal_only) {
    check_samples(samples);
    budget_ = samples[0].grid().resolution;
    thresholds_.reserve(samples.size());
    for (const SampleSet& s : samples) thresholds_.push_back(s.thresholds());
    idx_.assign(samples.size(), 0);
}

// Advance the level counter at `pos` (resetting everything after it), carrying
// leftwards; used both to step to the next candidate and to skip the whole
// subtree under an infeasible prefix.
void PinnedFrontier::bump(std::size_t pos) {
    for (std::size_t j = pos + 1; j < idx_.size(); ++j) idx_[j] = 0;
    std::size_t i = pos + 1;
    while (i-- > 0) {
        if (idx_[i] + 1 < thresholds_[i].size()) {
            ++idx_[i];
            return;
        }
        idx_[i] = 0;
    }
    exhausted_ = true;
}

bool PinnedFrontier::next(PinnedAllocation& out) {
    std::size_t n = idx_.size();
    while (!exhausted_) {
        long total = 0;
        std::size_t overrun = n;
        for (std::size_t i = 0; i < n; ++i) {
            total += thresholds_[i][idx_[i]];
            if (total > budget_) {
                overrun = i;
                break;
            }
        }
        if (overrun < n) {
            bump(overrun);
            continue;
        }
        bool maximal = true;
        if (maximal_only_) {
            for (std::size_t i = 0; i < n; ++i) {
                if (idx_[i] + 1 < thresholds_[i].size() &&
                    total - thresholds_[i][idx_[i]] + thresholds_[i][idx_[i] + 1] <= budget_) {
                    maximal = false;
                    break;
                }
            }
        }
        if (maximal) {
            out.level.resize(n);
            out.shares.resize(n);
            out.total = total;
            for (std::size_t i = 0; i < n; ++i) {
                out.level[i] = static_cast<int>(idx_[i]);
                out.shares[i] = thresholds_[i][idx_[i]];
            }
            bump(n - 1);
            return true;
        }
        bump(n - 1);
    }
    return false;
}

MmrResult mmr_over_extensions(std::span<const SampleSet> samples, const PinnedAllocation& base, SearchMethod search,
                              SolveStats* stats) {
    check_samples(samples);
    check_base(samples, base);
    std::size_t n = samples.size();
    int delta = samples[0].grid().resolution - static_cast<int>(base.total);
    std::vector<ExtensionInfo> info = extension_info(samples, base);
    std::vector<std::size_t> asc = order_by_gap(info, true);
    std::vector<std::size_t> desc = order_by_gap(info, false);

    CandidateSet pool(samples, search, stats);
    pool.add(base.to_allocation());
    int steps = 0;

    if (delta > 0 && !asc.empty()) {
        // Start with everything on the bin whose utility is least uncertain,
        // then let each witness tell us where the surplus is being outbid:
        // the witness frees `gamma` units by dropping off thresholds, so
        // spreading chunks of `gamma` over the widest bins forces it to pay
        // full price more than once.
        std::vector<int> start(n, 0);
        pour(start, info, asc, delta);

        std::vector<int> cur = start;
        std::set<std::vector<int>> visited{cur};
        for (int guard = 0; guard < 64; ++guard) {
            Allocation a = apply_delta(base, cur);
            pool.add(a);
            const RegretCertificate& cert = pool.certify(a);
            bool shared = false;
            for (std::size_t i = 0; i < n && !shared; ++i)
                shared = info[i].extendable && cert.witness.shares[i] == a.shares[i] + 1 &&
                         cert.witness.shares[i] <= info[i].next;
            if (!shared) break; // the witness sidesteps every bin we occupy: this extension is optimal
            int gamma = snap_to_thresholds(samples, cert.witness).surplus;
            if (gamma <= 0 || gamma > delta) break;
            std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(delta / gamma), desc.size());
            std::vector<int> d(n, 0);
            int left = delta;
            for (std::size_t t = 0; t < m; ++t) {
                std::size_t i = desc[t];
                int add = std::min({gamma, info[i].cap, left});
                d[i] += add;
                left -= add;
            }
            pour(d, info, asc, left);
            if (d == cur || !visited.insert(d).second) break;
            cur = std::move(d);
            ++steps;
        }

        // Fallback family: even splits over the widest bins and full
        // concentrations, so a misleading witness cannot hide the optimum.
        for (std::size_t m = 1; m <= desc.size(); ++m) {
            int chunk = delta / static_cast<int>(m);
            if (chunk == 0) break;
            std::vector<int> d(n, 0);
            int left = delta;
            for (std::size_t t = 0; t < m; ++t) {
                std::size_t i = desc[t];
                int add = std::min({chunk, info[i].cap, left});
                d[i] += add;
                left -= add;
            }
            pour(d, info, asc, left);
            pool.add(apply_delta(base, d));
        }
        for (std::size_t i : asc) {
            std::vector<int> d(n, 0);
            d[i] = std::min(delta, info[i].cap);
            pour(d, info, asc, delta - d[i]);
            pool.add(apply_delta(base, d));
        }

        // Every maximal placement, to make the answer exact. Within one
        // pinned class, moving a share up inside its bin leaves the holder's
        // own guaranteed level alone and makes each rival's step into that
        // bin a unit dearer, so regret only falls: the class minimum sits on
        // a placement that cannot grow. The guided search above usually found
        // it already and the pool drops repeats.
        long room = 0;
        for (std::size_t i : asc) room += info[i].cap;
        int place = static_cast<int>(std::min<long>(delta, room));
        std::vector<int> d(n, 0);
        auto sweep = [&](auto&& self, std::size_t t, int left) -> void {
            if (t + 1 == asc.size()) {
                if (left <= info[asc[t]].cap) {
                    d[asc[t]] = left;
                    pool.add(apply_delta(base, d));
                    d[asc[t]] = 0;
                }
                return;
            }
            long tail = 0;
            for (std::size_t r = t + 1; r < asc.size(); ++r) tail += info[asc[r]].cap;
            int lo = static_cast<int>(std::max<long>(0, left - tail));
            int hi = std::min(info[asc[t]].cap, left);
            for (int v = lo; v <= hi; ++v) {
                d[asc[t]] = v;
                self(self, t + 1, left - v);
            }
            d[asc[t]] = 0;
        };
        sweep(sweep, 0, place);
    }

    return pool.pick_best(base, steps);
}

namespace {

MmrResult approx_over_extensions(std::span<const SampleSet> samples, const PinnedAllocation& base,
                                 const SolveOptions& options, std::uint64_t draw_seed, SolveStats* stats) {
    std::size_t n = samples.size();
    int delta = samples[0].grid().resolution - static_cast<int>(base.total);
    std::vector<ExtensionInfo> info = extension_info(samples, base);
    std::vector<std::size_t> open = order_by_gap(info, true);

    CandidateSet pool(samples, options.search, stats);
    if (delta > 0 && !open.empty()) {
        std::mt19937_64 rng(draw_seed);
        std::uniform_int_distribution<int> cut(0, delta);
        for (int s = 0; s < options.extension_samples; ++s) {
            std::vector<int> cuts(open.size() + 1, 0);
            cuts.back() = delta;
            for (std::size_t t = 1; t + 1 < cuts.size(); ++t) cuts[t] = cut(rng);
            std::sort(cuts.begin(), cuts.end());
            std::vector<int> d(n, 0);
            int left = delta;
            for (std::size_t t = 0; t < open.size(); ++t) {
                int part = std::min({cuts[t + 1] - cuts[t], info[open[t]].cap, left});
                d[open[t]] = part;
                left -= part;
            }
            pour(d, info, open, left);
            pool.add(apply_delta(base, d));
        }
    }
    pool.add(base.to_allocation());
    return pool.pick_best(base, 0);
}

// Exact floor on the max regret of every extension of `base`, using only the
// incumbent's witness as the rival: the witness keeps its full upper-bound
// value except where an extension can outbid it inside a shared bin, and the
// best the extension can do is spend its surplus on the most valuable
// outbids. Anything the bound already puts above the incumbent's regret
// cannot contain an improvement.
double extension_bound(std::span<const SampleSet> samples, const PinnedAllocation& base, const Allocation& w) {
    std::vector<ExtensionInfo> info = extension_info(samples, base);
    int delta = samples[0].grid().resolution - static_cast<int>(base.total);
    double witness_value = 0;
    double held_value = 0;
    struct Outbid {
        int cost;
        double gain;
    };
    std::vector<Outbid> outbids;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        held_value += samples[i].values()[base.level[i]];
        int wi = w.shares[i];
        if (info[i].extendable && wi > base.shares[i] && wi <= info[i].next) {
            witness_value += samples[i].values()[base.level[i] + 1];
            if (wi - base.shares[i] <= info[i].cap) outbids.push_back({wi - base.shares[i], info[i].gap});
        } else {
            // Exact for every extension: coordinates outside the contested
            // bin see the subject-at-base adversary (which caps the witness
            // below the saturation sample when the base holds it).
            witness_value += samples[i].adversarial_utility(base.shares[i]).value_at(wi);
        }
    }
    double best_gain = 0;
    if (outbids.size() <= 16) {
        for (std::uint32_t mask = 0; mask < (1u << outbids.size()); ++mask) {
            long cost = 0;
            double gain = 0;
            for (std::size_t t = 0; t < outbids.size(); ++t)
                if (mask & (1u << t)) {
                    cost += outbids[t].cost;
                    gain += outbids[t].gain;
                }
            if (cost <= delta) best_gain = std::max(best_gain, gain);
        }
    } else {
        std::vector<double> best(delta + 1, 0.0);
        for (const Outbid& o : outbids)
            for (int b = delta; b >= o.cost; --b) best[b] = std::max(best[b], best[b - o.cost] + o.gain);
        best_gain = best[delta];
    }
    return std::max(0.0, witness_value - best_gain - held_value);
}

} // namespace

MmrResult minimax_allocation(std::span<const SampleSet> samples, const SolveOptions& options, SolveStats* stats,
                             std::vector<TraceRow>* trace) {
    check_samples(samples);
    if (options.extension_samples < 0) throw domain_error("extension sample count must be nonnegative");
    long reachable = 0;
    for (const SampleSet& s : samples) reachable += s.saturation();
    if (reachable < samples[0].grid().resolution)
        throw trivial_instance_error("every WM can be saturated at once; nothing to trade off");

    SolveStats local;
    SolveStats* st = stats ? stats : &local;
    constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

    PinnedFrontier frontier(samples, options.mode != SolveMode::kExact);
    std::optional<MmrResult> incumbent;
    PinnedAllocation p;
    while (frontier.next(p)) {
        st->frontier_seen++;
        double lb = kNan;
        if (incumbent && options.pruning) {
            st->bound_evals++;
            lb = extension_bound(samples, p, incumbent->certificate.witness);
            if (lb > incumbent->regret + kUtilityTol) {
                st->frontier_pruned++;
                if (trace) trace->push_back({p, lb, true, kNan});
                continue;
            }
        }
        MmrResult r = options.mode == SolveMode::kExact
                          ? mmr_over_extensions(samples, p, options.search, st)
                          : approx_over_extensions(samples, p, options,
                                                   mix64(options.seed ^ mix64(static_cast<std::uint64_t>(st->frontier_seen))),
                                                   st);
        st->frontier_expanded++;
        if (trace) trace->push_back({p, lb, false, r.regret});
        // The incumbent's regret never rises, even on tie swaps; pruning
        // relies on that to be a pure optimization. Ties keep the fuller
        // allocation, then the lexicographically smaller one.
        bool take = !incumbent || r.regret < incumbent->regret;
        if (!take && r.regret == incumbent->regret) {
            long mine = share_total(r.allocation);
            long held = share_total(incumbent->allocation);
            take = mine > held || (mine == held && lex_less(r.allocation, incumbent->allocation));
        }
        if (take) incumbent = std::move(r);
    }
    return *incumbent;
}

Allocation optimistic_allocation(std::span<const SampleSet> samples) {
    check_samples(samples);
    int budget = samples[0].grid().resolution;
    std::vector<StepUtility> envs;
    envs.reserve(samples.size());
    for (const SampleSet& s : samples) envs.push_back(s.upper_envelope());
    StepOptimum top = maximize_step_sum(envs, budget, SearchMethod::kAuto);
    Allocation a = std::move(top.choice);
    long used = 0;
    for (int s : a.shares) used += s;
    int slack = budget - static_cast<int>(used);
    // Exhaust the resource without changing anyone's claimed utility level:
    // widen shares up to the end of their plateau, starting from the back so
    // the front WMs keep their minimal shares.
    for (std::size_t i = samples.size(); i-- > 0 && slack > 0;) {
        double v = envs[i].value_at(a.shares[i]);
        int plateau_end = a.shares[i];
        for (std::size_t t = envs[i].level_count(); t-- > 0;) {
            if (envs[i].level_value(t) == v) {
                plateau_end = std::max(plateau_end, envs[i].breakpoint(t));
                break;
            }
        }
        int add = std::min(slack, plateau_end - a.shares[i]);
        if (add > 0) {
            a.shares[i] += add;
            slack -= add;
        }
    }
    return a;
}

PinnedAllocation greedy_pinned_allocation(std::span<const SampleSet> samples) {
    check_samples(samples);
    long budget = samples[0].grid().resolution;
    std::size_t n = samples.size();
    PinnedAllocation p;
    p.level.assign(n, 0);
    p.shares.assign(n, 0);
    p.total = 0;
    while (true) {
        std::size_t best_i = n;
        double best_slope = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<int>& thr = samples[i].thresholds();
            std::size_t rank = static_cast<std::size_t>(p.level[i]);
            if (rank + 1 >= thr.size()) continue;
            int width = thr[rank + 1] - thr[rank];
            if (p.total + width > budget) continue;
            double slope = (samples[i].values()[rank + 1] - samples[i].values()[rank]) / width;
            if (slope > best_slope) {
                best_slope = slope;
                best_i = i;
            }
        }
        if (best_i == n) break;
        const std::vector<int>& thr = samples[best_i].thresholds();
        p.total += thr[p.level[best_i] + 1] - thr[p.level[best_i]];
        p.level[best_i]++;
        p.shares[best_i] = thr[p.level[best_i]];
    }
    return p;
}

} // namespace nego
