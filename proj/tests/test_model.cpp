#include <doctest.h>

#include <cmath>

#include "peeroff/errors.hpp"
#include "peeroff/model.hpp"
#include "peeroff/random.hpp"

using namespace peeroff;

TEST_CASE("g_hat matches g on [0,1] and extends linearly below zero") {
    const auto lin = UtilitySpec::linear(1.0);
    CHECK(g_hat_eval(lin, 0.5) == doctest::Approx(0.5));
    CHECK(g_hat_eval(lin, -0.5) == doctest::Approx(-0.5));
    const auto lg = UtilitySpec::log(1.0);
    CHECK(lg.nu() == doctest::Approx(1.0));
    CHECK(g_hat_eval(lg, 1.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(g_hat_eval(lg, -1.0) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(g_hat_eval(lin, -1.0001), DomainError);
}

TEST_CASE("g_hat is non-decreasing and agrees with g on [0,1]") {
    Rng rng = make_stream(11, 0);
    const UtilitySpec specs[] = {UtilitySpec::linear(0.7), UtilitySpec::log(2.0),
                                 UtilitySpec::piecewise({{0.0, 0.0}, {0.3, 0.6}, {1.0, 0.9}})};
    for (const auto& u : specs) {
        for (int k = 0; k < 2000; ++k) {
            double a = -1.0 + 3.0 * uniform01(rng), b = -1.0 + 3.0 * uniform01(rng);
            if (a > b) std::swap(a, b);
            CHECK(g_hat_eval(u, a) <= g_hat_eval(u, b) + 1e-15);
            const double y = uniform01(rng);
            CHECK(g_hat_eval(u, y) == u.value(y));
        }
    }
}

TEST_CASE("piecewise utilities are validated") {
    CHECK_NOTHROW(UtilitySpec::piecewise({{0.0, 0.0}, {0.5, 1.0}, {1.0, 1.2}}));
    // slopes 2 then 0.4: nu is the first slope
    CHECK(UtilitySpec::piecewise({{0.0, 0.0}, {0.5, 1.0}, {1.0, 1.2}}).nu() == doctest::Approx(2.0));
    CHECK_THROWS_AS(UtilitySpec::piecewise({{0.0, 0.0}, {0.5, 0.2}, {1.0, 1.0}}), ConfigError);  // convex
    CHECK_THROWS_AS(UtilitySpec::piecewise({{0.0, 0.0}, {0.5, 0.5}, {1.0, 0.4}}), ConfigError);  // decreasing
    CHECK_THROWS_AS(UtilitySpec::piecewise({{0.1, 0.0}, {1.0, 1.0}}), ConfigError);
    CHECK_THROWS_AS(UtilitySpec::piecewise({{0.0, 0.0}, {0.8, 1.0}}), ConfigError);
}

TEST_CASE("physical queue update") {
    QueueState q;
    update_physical_queue(q, 0, 0, 1, 0);
    CHECK(q.q_len == 1);
    CHECK(q.h == 1);

    QueueState r;
    r.q_len = 3;
    r.arrival_slots = {2, 4, 6};
    update_physical_queue(r, 1, 0, 0, 7);
    CHECK(r.q_len == 2);
    CHECK(r.h == 8 - 4);

    // serving the only task while a new one arrives: H becomes the new task's age
    QueueState s;
    s.q_len = 1;
    s.arrival_slots = {3};
    update_physical_queue(s, 1, 0, 1, 9);
    CHECK(s.q_len == 1);
    CHECK(s.arrival_slots.front() == 9);
    CHECK(s.h == 1);

    QueueState e;
    CHECK_THROWS_AS(update_physical_queue(e, 1, 0, 0, 0), ContractError);
    CHECK_THROWS_AS(update_physical_queue(s, 1, 1, 0, 10), ContractError);
}

TEST_CASE("physical queue conserves tasks and keeps H equal to the head age") {
    Rng rng = make_stream(5, 0);
    QueueState q;
    for (Slot t = 0; t < 5000; ++t) {
        int eta = 0, d = 0;
        if (q.q_len > 0) {
            const double u = uniform01(rng);
            eta = u < 0.4;
            d = !eta && u < 0.5;
        }
        const int a = bernoulli(rng, 0.45);
        const int before = q.q_len;
        update_physical_queue(q, eta, d, a, t);
        CHECK(q.q_len - before == a - (eta + d));
        CHECK(static_cast<std::size_t>(q.q_len) == q.arrival_slots.size());
        CHECK(q.h == (q.q_len > 0 ? static_cast<int>(t + 1 - q.arrival_slots.front()) : 0));
    }
}

TEST_CASE("virtual queue updates") {
    QueueState q;
    update_virtual_queues(q, {1, 1.0, 0.0, 0.8, 0.05});
    CHECK(q.z == doctest::Approx(1.2));
    QueueState w;
    w.w = 2.0;
    update_virtual_queues(w, {0, 0.0, 0.174, 0.0, 0.05});
    CHECK(w.w == doctest::Approx(2.124));
    QueueState low;
    update_virtual_queues(low, {0, -1.0, 0.01, 0.5, 0.05});
    CHECK(low.z == 0.0);
    CHECK(low.w == 0.0);
}

TEST_CASE("head-of-line age rule") {
    CHECK(hol_age_rule(4, true, 1, 2, 0) == 3);
    CHECK(hol_age_rule(4, true, 0, 2, 0) == 5);
    CHECK(hol_age_rule(1, true, 1, 7, 0) == 0);
    CHECK(hol_age_rule(0, false, 0, 0, 1) == 1);
}

TEST_CASE("delay step function") {
    CHECK(delta_from_distance(250.0) == 3);
    CHECK(delta_from_distance(300.0) == 3);
    CHECK(delta_from_distance(300.5) == 4);
    CHECK(delta_from_distance(600.0) == 4);
    CHECK(delta_from_distance(900.0) == 5);
    CHECK_FALSE(delta_from_distance(950.0).has_value());
    CHECK(delta_from_distance(250.0, 0.5) == 6);
    CHECK_THROWS_AS(delta_from_distance(-1.0), DomainError);
}

TEST_CASE("great-circle distance and topology from positions") {
    // 250 m due north: 250 / R radians of latitude
    const double dlat = 250.0 / 6371008.8 * 180.0 / M_PI;
    const GeoPoint a{-37.816, 144.96}, b{-37.816 + dlat, 144.96};
    CHECK(great_circle_distance_m(a, b) == doctest::Approx(250.0).epsilon(1e-9));
    const std::vector<GeoPoint> pts{a, b, {-37.816 + 4 * dlat, 144.96}};
    const Topology t = topology_from_positions(pts);
    CHECK(t.delta(0, 1) == 3);
    CHECK(t.delta(1, 0) == 3);
    CHECK(t.delta(1, 2) == 5);  // 750 m
    CHECK_FALSE(t.peer_mask(0, 2));  // 1000 m
    CHECK(t.peer_mask(0, 0));
    CHECK(t.delta_max == 5);
}

TEST_CASE("energy model and service cap") {
    StationConfig s;
    CHECK(energy_of_slot(s, 0) == doctest::Approx(0.01));
    CHECK(energy_of_slot(s, 1) == doctest::Approx(0.174));
    // e1 = e0 + 8.2 nJ per cycle over 2e7 cycles
    CHECK(s.e_active == doctest::Approx(0.01 + 8.2e-9 * 2e7));
    CHECK(service_cap(s) == doctest::Approx(0.04 / 0.164));

    // time-average energy of a schedule serving a cap fraction of slots meets the budget
    Rng rng = make_stream(9, 0);
    double total = 0.0;
    const int slots = 200000;
    for (int t = 0; t < slots; ++t) total += energy_of_slot(s, bernoulli(rng, service_cap(s)));
    CHECK(total / slots == doctest::Approx(s.e_budget).epsilon(0.01));

    StationConfig bad;
    bad.e_budget = 0.005;
    CHECK_THROWS_AS(validate_station(bad), ConfigError);
    bad = StationConfig{};
    bad.e_active = bad.e_static;
    CHECK_THROWS_AS(validate_station(bad), ConfigError);
}

TEST_CASE("decision checks") {
    Topology topo = Topology::uniform(2, 1);
    std::vector<QueueState> st(2);
    st[0].q_len = 1;
    st[0].arrival_slots = {0};
    SlotDecision dec(2);
    dec.b(0, 1) = 1;
    CHECK_NOTHROW(check_decision(dec, st, topo));
    CHECK(dec.eta(0) == 1);
    CHECK(dec.served_by(1) == 1);
    dec.b(1, 1) = 1;  // empty queue
    CHECK_THROWS_AS(check_decision(dec, st, topo), ContractError);
    SlotDecision both(2);
    both.b(0, 0) = 1;
    both.d[0] = 1;
    CHECK_THROWS_AS(check_decision(both, st, topo), ContractError);
    Topology iso = Topology::isolated(2);
    SlotDecision off(2);
    off.b(0, 1) = 1;
    CHECK_THROWS_AS(check_decision(off, st, iso), ContractError);
}
