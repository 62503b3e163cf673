#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nego/grid.hpp"

namespace nego {

/// Expected M/M/1 response time, or nullopt when the queue is unstable
/// (mu <= lambda). A non-positive service rate is a caller bug.
std::optional<double> mm1_response_time(double lambda, double mu);

/// Payment drops from `payment` to 0 around the response-time threshold.
/// smoothing_width 0 is a hard step (pay iff t <= threshold); positive widths
/// use a logistic roll-off. Unstable service always pays 0.
struct ContractSpec {
    double payment = 0;
    double response_threshold = 0;
    double smoothing_width = 0;
};

double contract_payment(const ContractSpec& contract, std::optional<double> response_time);

struct TransactionClass {
    double arrival_rate = 0;
    ContractSpec contract;
};

/// A workload manager serving transaction classes from a capacity pool:
/// a resource share buys share * capacity_rate of total service rate, split
/// among classes to maximize contract revenue.
struct WmModel {
    std::string wm_id;
    std::vector<TransactionClass> classes;
    double capacity_rate = 0;
    int split_grid = 101; // candidate fractions per class when splitting capacity
};

/// Best total contract payment over all capacity splits on the split grid.
/// Classes whose slice cannot beat their arrival rate are unstable and pay 0.
double wm_utility(const WmModel& model, double share);

// --- synthetic utility curves for experiments ---------------------------

/// 0 below `jump`, `plateau` above jump + ramp, linear in between.
struct NearStepSpec {
    double jump = 0.5;
    double plateau = 1;
    double ramp = 0;
};

/// Piecewise-linear monotone curve through `knots` seeded control points,
/// anchored at u(0) = 0 and flat after the last knot.
struct RandomMonotoneSpec {
    std::uint64_t seed = 0;
    int knots = 4;
    double scale = 1;
};

using SyntheticWm = std::variant<NearStepSpec, RandomMonotoneSpec>;

double synthetic_utility(const SyntheticWm& spec, double x);

// --- query interface ------------------------------------------------------

/// What the negotiation is allowed to see of a WM: utility lookups at grid
/// shares (counted; queries are the cost metric and the counter is safe under
/// concurrent use) plus the advertised saturation share, which is free.
class UtilityOracle {
public:
    UtilityOracle(std::string wm_id, Grid grid) : wm_id_(std::move(wm_id)), grid_(grid) {}
    virtual ~UtilityOracle() = default;

    const std::string& wm_id() const { return wm_id_; }
    const Grid& grid() const { return grid_; }

    double query(int units) {
        if (!grid_.valid(units)) throw domain_error("query share off the grid");
        calls_.fetch_add(1, std::memory_order_relaxed);
        return utility_at(units);
    }

    long query_count() const { return calls_.load(std::memory_order_relaxed); }

    /// Smallest grid share whose utility is within tolerance of the utility
    /// at the full resource; the curve is flat from here on.
    virtual int saturation_units() const = 0;

protected:
    virtual double utility_at(int units) const = 0;

    /// Bisection helper for monotone curves.
    int locate_saturation() const;

private:
    std::string wm_id_;
    Grid grid_;
    std::atomic<long> calls_{0};
};

class ModelOracle : public UtilityOracle {
public:
    ModelOracle(WmModel model, Grid grid);

    int saturation_units() const override { return saturation_; }
    const WmModel& model() const { return model_; }

protected:
    double utility_at(int units) const override;

private:
    WmModel model_;
    int saturation_;
};

class SyntheticOracle : public UtilityOracle {
public:
    /// report_full_saturation makes the oracle advertise the whole resource
    /// as its saturation share even when the curve flattens earlier.
    SyntheticOracle(std::string wm_id, SyntheticWm spec, Grid grid, bool report_full_saturation = false);

    int saturation_units() const override { return saturation_; }

protected:
    double utility_at(int units) const override;

private:
    SyntheticWm spec_;
    int saturation_;
};

/// Step curve through fixed (share, utility) points: utility of the greatest
/// tabulated share <= x. Handy as a replayable WM in tests.
class TabulatedOracle : public UtilityOracle {
public:
    TabulatedOracle(std::string wm_id, Grid grid, std::vector<int> shares, std::vector<double> utilities);

    int saturation_units() const override { return saturation_; }

protected:
    double utility_at(int units) const override;

private:
    std::vector<int> shares_;
    std::vector<double> utilities_;
    int saturation_;
};

} // namespace nego
