#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <thread>
#include <vector>

#include "nego/wm_model.hpp"

using namespace nego;

TEST_CASE("m/m/1 response time") {
    CHECK(mm1_response_time(1, 2) == doctest::Approx(1.0));
    CHECK(mm1_response_time(0, 4) == doctest::Approx(0.25));
    CHECK_FALSE(mm1_response_time(2, 2).has_value());
    CHECK_FALSE(mm1_response_time(3, 2).has_value());
    CHECK_THROWS_AS(mm1_response_time(1, 0), domain_error);
    CHECK_THROWS_AS(mm1_response_time(1, -1), domain_error);
}

TEST_CASE("response time grows toward instability") {
    double prev = 0;
    for (double mu = 5; mu > 1.01; mu -= 0.5) {
        double t = *mm1_response_time(1, mu);
        CHECK(t > prev);
        prev = t;
    }
}

TEST_CASE("hard contract pays in full up to the threshold") {
    ContractSpec c{10, 2, 0};
    CHECK(contract_payment(c, 1.0) == 10);
    CHECK(contract_payment(c, 2.0) == 10); // boundary inclusive
    CHECK(contract_payment(c, 3.0) == 0);
    CHECK(contract_payment(c, std::nullopt) == 0);
}

TEST_CASE("smoothed contract rolls off through half payment at the threshold") {
    ContractSpec c{10, 2, 0.5};
    CHECK(contract_payment(c, 2.0) == doctest::Approx(5.0));
    CHECK(contract_payment(c, 1.0) > contract_payment(c, 2.0));
    CHECK(contract_payment(c, 3.0) < contract_payment(c, 2.0));
    CHECK(contract_payment(c, std::nullopt) == 0);

    // narrow widths approach the hard step away from the threshold
    ContractSpec tight{10, 2, 1e-6};
    CHECK(contract_payment(tight, 1.9) == doctest::Approx(10.0));
    CHECK(contract_payment(tight, 2.1) == doctest::Approx(0.0));
}

TEST_CASE("payment never increases with response time") {
    ContractSpec c{7, 1.5, 0.3};
    double prev = contract_payment(c, 0.01);
    for (double t = 0.05; t < 5; t += 0.05) {
        double p = contract_payment(c, t);
        CHECK(p <= prev + 1e-12);
        prev = p;
    }
}

namespace {

WmModel two_class_model() {
    WmModel m;
    m.wm_id = "wm";
    m.classes = {{1.0, {10, 1, 0}}, {1.0, {10, 1, 0}}};
    m.capacity_rate = 20;
    m.split_grid = 101;
    return m;
}

} // namespace

TEST_CASE("wm utility maximizes contract revenue over capacity splits") {
    WmModel m = two_class_model();
    // 30% of rate 20 = 6, split 3/3: response 1/(3-1) = 0.5 <= 1 for both
    CHECK(wm_utility(m, 0.3) == doctest::Approx(20.0));
    CHECK(wm_utility(m, 0.0) == doctest::Approx(0.0));
    // 10% = rate 2: only one class can be made stable and meet its deadline
    CHECK(wm_utility(m, 0.1) == doctest::Approx(10.0));
}

TEST_CASE("wm utility is monotone and bounded by total payments") {
    WmModel m = two_class_model();
    double total = 0;
    for (const auto& tc : m.classes) total += tc.contract.payment;
    double prev = 0;
    for (int pct = 0; pct <= 100; pct += 5) {
        double u = wm_utility(m, pct / 100.0);
        CHECK(u >= prev - 1e-9);
        CHECK(u <= total + 1e-9);
        prev = u;
    }
}

TEST_CASE("near-step curve") {
    NearStepSpec s{0.5, 8, 0.001};
    CHECK(synthetic_utility(s, 0.4) == 0);
    CHECK(synthetic_utility(s, 0.6) == 8);
    CHECK(synthetic_utility(s, 0.5005) == doctest::Approx(4.0));
    CHECK(synthetic_utility(s, 1.0) - synthetic_utility(s, 0.0) == doctest::Approx(8.0));

    NearStepSpec sharp{0.5, 1, 0};
    CHECK(synthetic_utility(sharp, 0.499) == 0);
    CHECK(synthetic_utility(sharp, 0.501) == 1);
}

TEST_CASE("random monotone curve is deterministic in its seed and monotone") {
    RandomMonotoneSpec a{99, 5, 2};
    RandomMonotoneSpec b{99, 5, 2};
    RandomMonotoneSpec c{100, 5, 2};
    bool differs = false;
    double prev = -1;
    for (int i = 0; i <= 100; ++i) {
        double x = i / 100.0;
        double va = synthetic_utility(a, x);
        CHECK(va == synthetic_utility(b, x));
        if (va != synthetic_utility(c, x)) differs = true;
        CHECK(va >= prev - 1e-12);
        CHECK(va <= 2 + 1e-12);
        prev = va;
    }
    CHECK(differs);
    CHECK(synthetic_utility(a, 0.0) == 0);
}

TEST_CASE("oracle counts every query including repeats") {
    SyntheticOracle o("s", NearStepSpec{0.5, 1, 0}, Grid{10});
    CHECK(o.query_count() == 0);
    o.query(5);
    o.query(5);
    o.query(7);
    CHECK(o.query_count() == 3);
    CHECK_THROWS_AS(o.query(11), domain_error);
    CHECK_THROWS_AS(o.query(-1), domain_error);
    CHECK(o.query_count() == 3); // rejected asks are not charged
}

TEST_CASE("oracle query counter is safe under concurrent use") {
    SyntheticOracle o("s", NearStepSpec{0.5, 1, 0}, Grid{100});
    std::vector<std::thread> workers;
    for (int t = 0; t < 4; ++t)
        workers.emplace_back([&o] {
            for (int i = 0; i <= 100; ++i) o.query(i);
        });
    for (auto& w : workers) w.join();
    CHECK(o.query_count() == 4 * 101);
}

TEST_CASE("saturation share is where the curve reaches its full value") {
    SyntheticOracle o("s", NearStepSpec{0.5, 1, 0}, Grid{10});
    CHECK(o.saturation_units() == 5); // hard step pays its plateau at the jump itself

    SyntheticOracle ramped("s", NearStepSpec{0.5, 1, 0.2}, Grid{10});
    CHECK(ramped.saturation_units() == 7); // first grid point past jump + ramp

    SyntheticOracle full("s", NearStepSpec{0.5, 1, 0}, Grid{10}, true);
    CHECK(full.saturation_units() == 10);

    WmModel m = two_class_model();
    ModelOracle mo(m, Grid{100});
    // both deadlines met from 30%: rate 6 split evenly gives response 0.5
    CHECK(mo.saturation_units() <= 30);
    CHECK(mo.query(mo.saturation_units()) == doctest::Approx(wm_utility(m, 1.0)));
    if (mo.saturation_units() > 0)
        CHECK(mo.query(mo.saturation_units() - 1) < wm_utility(m, 1.0) - kUtilityTol);
}

TEST_CASE("tabulated oracle replays a fixed step curve") {
    TabulatedOracle o("t", Grid{10}, {0, 5, 10}, {0, 4, 10});
    CHECK(o.query(0) == 0);
    CHECK(o.query(3) == 0);
    CHECK(o.query(5) == 4);
    CHECK(o.query(7) == 4);
    CHECK(o.query(10) == 10);
    CHECK(o.saturation_units() == 10);

    TabulatedOracle early("t", Grid{10}, {0, 4}, {0, 9});
    CHECK(early.query(4) == 9);
    CHECK(early.query(10) == 9);
    CHECK(early.saturation_units() == 4);

    CHECK_THROWS_AS(TabulatedOracle("t", Grid{10}, {1, 5}, {0, 4}), domain_error);
    CHECK_THROWS_AS(TabulatedOracle("t", Grid{10}, {0, 5}, {4, 0}), domain_error);
}
