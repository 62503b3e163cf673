#include "nego/elicitation.hpp"

#include <algorithm>
#include <chrono>
#include <optional>

#include "nego/errors.hpp"

namespace nego {

const char* to_string(Strategy s) {
    switch (s) {
    case Strategy::kRandom: return "random";
    case Strategy::kHalveAll: return "halve-all";
    case Strategy::kHeuristicSplit: return "heuristic-split";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "random") return Strategy::kRandom;
    if (name == "halve-all") return Strategy::kHalveAll;
    if (name == "heuristic-split") return Strategy::kHeuristicSplit;
    throw config_error("unknown strategy '" + name + "'");
}

const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::kBelowThreshold: return "threshold";
    case StopReason::kMaxRounds: return "max-rounds";
    case StopReason::kExhausted: return "exhausted";
    }
    return "?";
}

double bin_score(const SampleSet& s, int bin_index) {
    Bin b = s.bin(bin_index);
    double top = s.values().back();
    double spread = top > kUtilityTol ? b.gap() / top : 0.0;
    return spread + static_cast<double>(b.width()) / s.saturation();
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

bool fully_sampled(const SampleSet& s) { return s.sample_count() == static_cast<std::size_t>(s.saturation()) + 1; }

// Uniform unsampled point in [0, saturation]. Rejection with a deterministic
// forward walk as a last resort; callers guarantee a free point exists.
int random_unsampled(const SampleSet& s, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> draw(0, s.saturation());
    for (int tries = 0; tries < 128; ++tries) {
        int x = draw(rng);
        if (!s.is_sampled(x)) return x;
    }
    int x = draw(rng);
    for (int k = 0; k <= s.saturation(); ++k) {
        int p = (x + k) % (s.saturation() + 1);
        if (!s.is_sampled(p)) return p;
    }
    return -1;
}

int midpoint(const Bin& b) { return b.lo + b.width() / 2; }

bool splittable(const SampleSet& s, int j) { return s.bin(j).width() >= 2; }

// Widest splittable bin, ties to the leftmost; 0 when every bin is width 1.
int widest_bin(const SampleSet& s) {
    int best = 0, best_width = 1;
    for (int j = 1; j <= s.bin_count(); ++j) {
        int w = s.bin(j).width();
        if (w > best_width) {
            best_width = w;
            best = j;
        }
    }
    return best;
}

// Bin a share belongs to for query targeting; share 0 counts as the first bin.
int owning_bin(const SampleSet& s, int units) {
    units = std::min(units, s.saturation());
    BinLookup look = s.bin_index(units);
    return std::max(look.index, 1);
}

// Heuristic-split bin choice: allocation bin vs witness bin by score, ties to
// the allocation bin, skipping unsplittable bins; when neither splits, the
// best splittable bin anywhere keeps the WM in play.
int heuristic_bin(const SampleSet& s, int alloc_share, int witness_share) {
    if (s.bin_count() == 0) return 0;
    int ja = owning_bin(s, alloc_share);
    int jw = owning_bin(s, witness_share);
    int primary = bin_score(s, jw) > bin_score(s, ja) ? jw : ja;
    int secondary = primary == ja ? jw : ja;
    if (splittable(s, primary)) return primary;
    if (splittable(s, secondary)) return secondary;
    int best = 0;
    double best_score = -1;
    for (int j = 1; j <= s.bin_count(); ++j) {
        if (!splittable(s, j)) continue;
        double score = bin_score(s, j);
        if (score > best_score) {
            best_score = score;
            best = j;
        }
    }
    return best;
}

} // namespace

std::vector<Query> next_queries(std::span<const SampleSet> samples, const MmrResult& current, Strategy strategy,
                                std::mt19937_64& rng, bool witness_point) {
    std::vector<Query> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const SampleSet& s = samples[i];
        if (s.saturation() == 0) continue; // nothing beyond the origin to learn
        switch (strategy) {
        case Strategy::kRandom: {
            if (fully_sampled(s)) break;
            out.push_back({i, random_unsampled(s, rng)});
            break;
        }
        case Strategy::kHalveAll: {
            int j = widest_bin(s);
            if (j > 0) out.push_back({i, midpoint(s.bin(j))});
            break;
        }
        case Strategy::kHeuristicSplit: {
            if (witness_point) {
                int w = std::min(current.certificate.witness.shares[i], s.saturation());
                if (!s.is_sampled(w)) {
                    out.push_back({i, w});
                    break;
                }
            }
            int j = heuristic_bin(s, current.allocation.shares[i], current.certificate.witness.shares[i]);
            if (j > 0) out.push_back({i, midpoint(s.bin(j))});
            break;
        }
        }
    }
    return out;
}

NegotiationResult run_negotiation(std::span<UtilityOracle* const> wms, const NegotiationConfig& config) {
    if (wms.empty()) throw domain_error("no WMs");
    for (UtilityOracle* o : wms)
        if (o == nullptr) throw domain_error("null WM oracle");
    Grid grid = wms[0]->grid();
    long reachable = 0;
    for (UtilityOracle* o : wms) {
        if (!(o->grid() == grid)) throw domain_error("WMs disagree on the grid");
        reachable += o->saturation_units();
    }
    if (reachable < grid.resolution)
        throw trivial_instance_error("every WM can be saturated at once; nothing to trade off");
    if (config.max_rounds < 1) throw domain_error("need at least one round");
    if (config.regret_threshold < 0) throw domain_error("regret threshold must be nonnegative");

    std::mt19937_64 rng(config.seed);
    NegotiationResult result;

    // Bootstrap: endpoints, then two random interior probes per WM.
    for (std::size_t i = 0; i < wms.size(); ++i) {
        UtilityOracle& o = *wms[i];
        int sat = o.saturation_units();
        std::vector<int> points{0};
        std::vector<double> values{o.query(0)};
        if (sat > 0) {
            points.push_back(sat);
            values.push_back(o.query(sat));
        }
        SampleSet s(o.wm_id(), grid, std::move(points), std::move(values));
        for (int extra = 0; extra < 2 && !fully_sampled(s); ++extra) {
            int x = random_unsampled(s, rng);
            s = s.with_sample(x, o.query(x));
        }
        result.samples.push_back(std::move(s));
    }

    std::optional<MmrResult> incumbent;
    int round = 0;
    while (true) {
        ++round;
        SolveOptions opts = config.solver;
        opts.seed = mix64(config.seed ^ mix64(static_cast<std::uint64_t>(round)));
        SolveStats stats;
        auto t0 = std::chrono::steady_clock::now();
        MmrResult fresh = minimax_allocation(result.samples, opts, &stats);
        if (incumbent) {
            // Recertify the held allocation under the grown sample sets and
            // keep it only if the new solve is strictly worse.
            RegretCertificate held = max_regret(result.samples, incumbent->allocation, opts.search);
            if (held.regret < fresh.regret) {
                incumbent->regret = held.regret;
                incumbent->certificate = std::move(held);
                incumbent->base = snap_to_thresholds(result.samples, incumbent->allocation).pinned;
            } else {
                incumbent = std::move(fresh);
            }
        } else {
            incumbent = std::move(fresh);
        }
        double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

        long queries_per_wm = 0;
        for (UtilityOracle* o : wms) queries_per_wm = std::max(queries_per_wm, o->query_count());
        result.trace.push_back(
            {round, queries_per_wm, incumbent->regret, incumbent->allocation, ms, stats.frontier_pruned});

        if (incumbent->regret <= config.regret_threshold) {
            result.reason = StopReason::kBelowThreshold;
            break;
        }
        if (round >= config.max_rounds) {
            result.reason = StopReason::kMaxRounds;
            break;
        }
        std::vector<Query> queries = next_queries(result.samples, *incumbent, config.strategy, rng, config.witness_point);
        if (queries.empty()) {
            result.reason = StopReason::kExhausted;
            break;
        }
        std::vector<QueryOutcome> outcomes;
        for (const Query& q : queries) {
            double lo = result.samples[q.wm].lower(q.share);
            double hi = result.samples[q.wm].upper(q.share);
            double response = wms[q.wm]->query(q.share);
            if (config.record_outcomes) outcomes.push_back({q.wm, q.share, response, lo, hi});
            result.samples[q.wm] = result.samples[q.wm].with_sample(q.share, response);
        }
        if (config.record_outcomes) result.outcomes.push_back(std::move(outcomes));
    }

    result.final_solution = std::move(*incumbent);
    return result;
}

} // namespace nego
