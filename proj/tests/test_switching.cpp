#include <doctest.h>

#include <cmath>
#include <limits>
#include <cstring>
#include <random>

#include "safelqr/errors.hpp"
#include "safelqr/montecarlo.hpp"
#include "safelqr/switching.hpp"
#include "safelqr/systems.hpp"
#include "test_support.hpp"

using namespace safelqr;
using namespace safelqr::testing;

namespace {

SwitchConfig demo_config(double threshold, int dwell) {
    Eigen::MatrixXd K0 = Eigen::MatrixXd::Zero(1, 2);
    Eigen::MatrixXd K1(1, 2);
    K1 << 0.0, 0.7;
    return SwitchConfig{K0, K1, threshold, dwell};
}

}  // namespace

TEST_CASE("switch step follows the three branches") {
    Eigen::MatrixXd K0(1, 2), K1(1, 2);
    K0 << 1.0, 2.0;
    K1 << -3.0, 4.0;
    SwitchConfig config{K0, K1, 5.0, 4};
    Eigen::VectorXd small(2), large(2);
    small << 1.0, 1.0;
    large << 3.0, 4.0;  // norm exactly 5: boundary must trigger

    SUBCASE("idle below the threshold: primary") {
        const auto d = switch_step(small, SwitchState{0}, config);
        CHECK(d.mode == Mode::Primary);
        CHECK_FALSE(d.triggered);
        CHECK((d.u - K1 * small).norm() == 0.0);
        CHECK(d.next.remaining == 0);
    }
    SUBCASE("idle at the threshold: trigger and start the dwell countdown") {
        const auto d = switch_step(large, SwitchState{0}, config);
        CHECK(d.mode == Mode::Fallback);
        CHECK(d.triggered);
        CHECK((d.u - K0 * large).norm() == 0.0);
        CHECK(d.next.remaining == 3);
    }
    SUBCASE("mid-episode: fallback regardless of the state") {
        for (const auto& x : {small, large}) {
            const auto d = switch_step(x, SwitchState{3}, config);
            CHECK(d.mode == Mode::Fallback);
            CHECK_FALSE(d.triggered);
            CHECK((d.u - K0 * x).norm() == 0.0);
            CHECK(d.next.remaining == 2);
        }
    }
}

TEST_CASE("dwell-time episodes run exactly t steps, then re-evaluate") {
    // Exhaustive over dwell times 1..5 and every above/below pattern fed
    // during and right after the episode.
    Eigen::VectorXd below(1), above(1);
    below << 0.5;
    above << 2.0;
    for (int dwell = 1; dwell <= 5; ++dwell) {
        SwitchConfig config{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1),
                            1.0, dwell};
        const int patterns = 1 << dwell;  // states fed at steps 1..t-1 and at t
        for (int bits = 0; bits < patterns; ++bits) {
            SwitchState state{0};
            auto first = switch_step(above, state, config);
            CHECK(first.triggered);
            CHECK(first.mode == Mode::Fallback);
            state = first.next;
            for (int offset = 1; offset < dwell; ++offset) {
                const auto& x = (bits >> offset) & 1 ? above : below;
                const auto d = switch_step(x, state, config);
                CHECK(d.mode == Mode::Fallback);
                CHECK_FALSE(d.triggered);
                state = d.next;
            }
            CHECK(state.remaining == 0);
            // step t: the threshold test is live again
            const bool high = bits & 1;
            const auto d = switch_step(high ? above : below, state, config);
            CHECK(d.mode == (high ? Mode::Fallback : Mode::Primary));
            CHECK(d.triggered == high);
        }
    }
}

TEST_CASE("counter stays within [0, t] under random driving") {
    std::mt19937_64 gen(17);
    std::normal_distribution<double> normal;
    SwitchConfig config = demo_config(1.5, 3);
    SwitchState state{0};
    for (int k = 0; k < 2000; ++k) {
        Eigen::VectorXd x(2);
        x << normal(gen), normal(gen);
        const auto d = switch_step(x, state, config);
        CHECK(d.next.remaining >= 0);
        CHECK(d.next.remaining <= config.dwell);
        state = d.next;
    }
}

TEST_CASE("switch step is deterministic") {
    SwitchConfig config = demo_config(2.0, 5);
    Eigen::VectorXd x(2);
    x << 1.9, 0.4;
    const auto a = switch_step(x, SwitchState{0}, config);
    const auto b = switch_step(x, SwitchState{0}, config);
    CHECK(std::memcmp(a.u.data(), b.u.data(), sizeof(double) * a.u.size()) == 0);
    CHECK(a.mode == b.mode);
    CHECK(a.triggered == b.triggered);
    CHECK(a.next.remaining == b.next.remaining);
}

TEST_CASE("infinite threshold reproduces the plain linear policy") {
    const auto plant = demo_plant();
    const auto weights = demo_weights();
    const auto sol = dare_solve(plant, weights);
    SwitchConfig config{Eigen::MatrixXd::Zero(1, 2), sol.K,
                        std::numeric_limits<double>::infinity(), 7};
    const RngStream stream(321, 0);
    auto switched = switched_policy(config)();
    auto linear = linear_policy(sol.K)();
    const auto a = rollout(plant, weights, *switched, 500, stream);
    const auto b = rollout(plant, weights, *linear, 500, stream);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        CHECK((a.states[k] - b.states[k]).norm() == 0.0);
    }
    for (std::size_t k = 0; k < a.modes.size(); ++k) {
        CHECK(a.modes[k] == Mode::Primary);
    }
    CHECK(a.trigger_count == 0);
}

TEST_CASE("vanishing threshold reproduces the fallback policy after step 0") {
    // The smallest positive threshold: any nonzero state triggers, and only
    // the all-zero start state (where both gains agree anyway) stays primary.
    const auto plant = demo_plant();
    const auto weights = demo_weights();
    Eigen::MatrixXd K1(1, 2);
    K1 << 0.3, -0.2;
    const Eigen::MatrixXd K0 = Eigen::MatrixXd::Zero(1, 2);
    SwitchConfig config{K0, K1, std::numeric_limits<double>::denorm_min(), 1};
    const RngStream stream(77, 0);
    auto switched = switched_policy(config)();
    auto fallback = linear_policy(K0)();
    const auto a = rollout(plant, weights, *switched, 300, stream);
    const auto b = rollout(plant, weights, *fallback, 300, stream);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        CHECK((a.states[k] - b.states[k]).norm() == 0.0);
    }
    for (std::size_t k = 1; k < a.modes.size(); ++k) {
        CHECK(a.modes[k] == Mode::Fallback);
    }
}

TEST_CASE("switch step input validation") {
    SwitchConfig config = demo_config(1.0, 2);
    Eigen::VectorXd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(switch_step(wrong, SwitchState{0}, config), DimensionError);

    Eigen::VectorXd bad(2);
    bad << std::numeric_limits<double>::quiet_NaN(), 0.0;
    CHECK_THROWS_AS(switch_step(bad, SwitchState{0}, config), ValidityError);

    Eigen::VectorXd ok(2);
    ok.setZero();
    CHECK_THROWS_AS(switch_step(ok, SwitchState{-1}, config), ValidityError);

    SwitchConfig bad_threshold = demo_config(0.0, 2);
    CHECK_THROWS_AS(switch_step(ok, SwitchState{0}, bad_threshold), DomainError);
    SwitchConfig bad_dwell = demo_config(1.0, 0);
    CHECK_THROWS_AS(switch_step(ok, SwitchState{0}, bad_dwell), DomainError);
}
