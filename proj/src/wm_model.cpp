#include "nego/wm_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nego/errors.hpp"

namespace nego {

std::optional<double> mm1_response_time(double lambda, double mu) {
    if (mu <= 0) throw domain_error("service rate must be positive");
    if (lambda < 0) throw domain_error("arrival rate must be nonnegative");
    if (mu <= lambda) return std::nullopt;
    return 1.0 / (mu - lambda);
}

double contract_payment(const ContractSpec& contract, std::optional<double> response_time) {
    if (!response_time) return 0;
    double t = *response_time;
    if (contract.smoothing_width == 0) {
        return t <= contract.response_threshold ? contract.payment : 0;
    }
    double z = (contract.response_threshold - t) / contract.smoothing_width;
    return contract.payment / (1.0 + std::exp(-z));
}

namespace {

double split_revenue(const WmModel& model, double mu_total, const std::vector<double>& fractions) {
    double total = 0;
    for (std::size_t c = 0; c < model.classes.size(); ++c) {
        const TransactionClass& tc = model.classes[c];
        double mu_c = fractions[c] * mu_total;
        // Unstable (or empty) slices pay nothing; skip them rather than
        // probing the queue model with a non-positive rate.
        if (mu_c <= tc.arrival_rate) continue;
        total += contract_payment(tc.contract, mm1_response_time(tc.arrival_rate, mu_c));
    }
    return total;
}

// Enumerate splits of the capacity over classes, each fraction a multiple of
// 1/(split_grid - 1), and keep the best revenue.
double best_split(const WmModel& model, double mu_total, std::vector<double>& fractions, std::size_t c, int units_left,
                  int denom) {
    if (c + 1 == model.classes.size()) {
        fractions[c] = static_cast<double>(units_left) / denom;
        return split_revenue(model, mu_total, fractions);
    }
    double best = 0;
    for (int u = 0; u <= units_left; ++u) {
        fractions[c] = static_cast<double>(u) / denom;
        best = std::max(best, best_split(model, mu_total, fractions, c + 1, units_left - u, denom));
    }
    return best;
}

} // namespace

double wm_utility(const WmModel& model, double share) {
    if (share < 0 || share > 1) throw domain_error("resource share must lie in [0, 1]");
    if (model.capacity_rate <= 0) throw domain_error("capacity rate must be positive");
    if (model.classes.empty()) throw domain_error("WM has no transaction classes");
    if (model.split_grid < 2) throw domain_error("split grid needs at least two points");

    double mu_total = share * model.capacity_rate;
    if (mu_total <= 0) return 0;
    if (model.classes.size() == 1) {
        std::vector<double> one{1.0};
        return split_revenue(model, mu_total, one);
    }
    std::vector<double> fractions(model.classes.size(), 0.0);
    int denom = model.split_grid - 1;
    return best_split(model, mu_total, fractions, 0, denom, denom);
}

double synthetic_utility(const SyntheticWm& spec, double x) {
    if (x < 0 || x > 1) throw domain_error("resource share must lie in [0, 1]");
    if (const auto* step = std::get_if<NearStepSpec>(&spec)) {
        if (x < step->jump) return 0;
        if (step->ramp <= 0 || x >= step->jump + step->ramp) return step->plateau;
        return step->plateau * (x - step->jump) / step->ramp;
    }
    const auto& rm = std::get<RandomMonotoneSpec>(spec);
    if (rm.knots < 1) throw domain_error("need at least one knot");
    std::mt19937_64 rng(rm.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> xs(rm.knots), ys(rm.knots);
    for (double& v : xs) v = unit(rng);
    for (double& v : ys) v = unit(rng) * rm.scale;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    // Interpolate through (0, 0) and the knots; flat past the last knot.
    double px = 0, py = 0;
    for (int i = 0; i < rm.knots; ++i) {
        if (x <= xs[i]) {
            double w = xs[i] - px;
            if (w <= 0) return ys[i];
            return py + (ys[i] - py) * (x - px) / w;
        }
        px = xs[i];
        py = ys[i];
    }
    return py;
}

int UtilityOracle::locate_saturation() const {
    int top = grid_.resolution;
    double full = utility_at(top);
    int lo = 0, hi = top;
    while (lo < hi) {
        int mid = lo + (hi - lo) / 2;
        if (utility_at(mid) >= full - kUtilityTol) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return lo;
}

ModelOracle::ModelOracle(WmModel model, Grid grid)
    : UtilityOracle(model.wm_id, grid), model_(std::move(model)), saturation_(locate_saturation()) {}

double ModelOracle::utility_at(int units) const { return wm_utility(model_, grid().to_real(units)); }

SyntheticOracle::SyntheticOracle(std::string wm_id, SyntheticWm spec, Grid grid, bool report_full_saturation)
    : UtilityOracle(std::move(wm_id), grid), spec_(std::move(spec)),
      saturation_(report_full_saturation ? grid.resolution : locate_saturation()) {}

double SyntheticOracle::utility_at(int units) const { return synthetic_utility(spec_, grid().to_real(units)); }

TabulatedOracle::TabulatedOracle(std::string wm_id, Grid grid, std::vector<int> shares, std::vector<double> utilities)
    : UtilityOracle(std::move(wm_id), grid), shares_(std::move(shares)), utilities_(std::move(utilities)),
      saturation_(0) {
    if (shares_.empty() || shares_.size() != utilities_.size())
        throw domain_error("tabulated WM needs matching share and utility lists");
    if (shares_.front() != 0) throw domain_error("tabulated WM must start at share 0");
    for (std::size_t i = 0; i < shares_.size(); ++i) {
        if (!grid.valid(shares_[i])) throw domain_error("tabulated share off the grid");
        if (i > 0 && shares_[i] <= shares_[i - 1]) throw domain_error("tabulated shares must increase");
        if (i > 0 && utilities_[i] < utilities_[i - 1]) throw domain_error("tabulated utilities must not decrease");
    }
    saturation_ = locate_saturation();
}

double TabulatedOracle::utility_at(int units) const {
    auto it = std::upper_bound(shares_.begin(), shares_.end(), units);
    return utilities_[static_cast<std::size_t>(it - shares_.begin()) - 1];
}

} // namespace nego
