#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "nafreach/errors.hpp"
#include "nafreach/replay.hpp"

using namespace nafreach;

namespace {

Transition tagged(double tag) {
    Transition t;
    t.state = {tag, 0.0, 0.0};
    t.action = {0.5};
    t.reward = tag;
    t.next_state = {tag, 0.0, 0.0};
    t.terminal = false;
    return t;
}

} // namespace

TEST_CASE("sampling is blocked until transitions leave the episode buffer") {
    DualReplayBuffer buf(100);
    Rng rng(1);
    for (int i = 0; i < 5; ++i) buf.record(tagged(i));
    CHECK(buf.episode_size() == 5);
    CHECK(buf.back_size() == 0);
    CHECK(!buf.sample(1, rng).has_value());

    buf.end_episode();
    CHECK(buf.episode_size() == 0);
    CHECK(buf.back_size() == 5);
    auto got = buf.sample(5, rng);
    REQUIRE(got.has_value());
    for (const auto& t : *got) {
        CHECK(t.reward >= 0);
        CHECK(t.reward <= 4);
    }
}

TEST_CASE("current-episode transitions are never sampled before episode end") {
    DualReplayBuffer buf(100);
    Rng rng(7);
    for (int i = 0; i < 10; ++i) buf.record(tagged(100 + i));
    buf.end_episode();
    for (int i = 0; i < 10; ++i) buf.record(tagged(200 + i));  // current episode
    for (int trial = 0; trial < 2000; ++trial) {
        auto got = buf.sample(4, rng);
        REQUIRE(got.has_value());
        for (const auto& t : *got) CHECK(t.reward < 200);
    }
}

TEST_CASE("record leaves the back buffer untouched") {
    DualReplayBuffer buf(100);
    Rng rng(3);
    buf.record(tagged(1));
    buf.end_episode();
    const auto before = *buf.sample(1, rng);
    for (int i = 0; i < 50; ++i) buf.record(tagged(777));
    CHECK(buf.back_size() == 1);
    const auto after = *buf.sample(1, rng);
    CHECK(after[0].reward == before[0].reward);
}

TEST_CASE("fifo eviction keeps the most recent transitions") {
    DualReplayBuffer buf(3);
    Rng rng(5);
    buf.record(tagged(0));
    buf.record(tagged(1));
    buf.end_episode();
    buf.record(tagged(2));
    buf.record(tagged(3));
    buf.end_episode();
    CHECK(buf.back_size() == 3);
    std::set<int> seen;
    for (int i = 0; i < 500; ++i)
        for (const auto& t : *buf.sample(3, rng)) seen.insert(static_cast<int>(t.reward));
    CHECK(seen == std::set<int>{1, 2, 3});
}

TEST_CASE("empty end_episode is a no-op") {
    DualReplayBuffer buf(10);
    buf.end_episode();
    CHECK(buf.back_size() == 0);
    buf.record(tagged(1));
    buf.end_episode();
    buf.end_episode();
    CHECK(buf.back_size() == 1);
}

TEST_CASE("single-element buffer always returns that element") {
    DualReplayBuffer buf(10);
    Rng rng(9);
    buf.record(tagged(42));
    buf.end_episode();
    auto got = buf.sample(1, rng);
    REQUIRE(got.has_value());
    CHECK((*got)[0].reward == 42);
    CHECK(!buf.sample(2, rng).has_value());  // not ready for k=2
}

TEST_CASE("draw frequencies over a 10-element buffer are uniform") {
    DualReplayBuffer buf(100);
    Rng rng(11);
    for (int i = 0; i < 10; ++i) buf.record(tagged(i));
    buf.end_episode();
    std::vector<int> counts(10, 0);
    const int draws = 100000;
    for (int i = 0; i < draws / 10; ++i)
        for (const auto& t : *buf.sample(10, rng)) ++counts[static_cast<int>(t.reward)];
    // chi-square against uniform: 9 dof, 3-sigma-ish critical value
    const double expect = draws / 10.0;
    double chi2 = 0;
    for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
    CHECK(chi2 < 27.9);  // p ~ 0.001 for 9 dof
}

TEST_CASE("seeded sampling is reproducible") {
    DualReplayBuffer buf(100);
    for (int i = 0; i < 20; ++i) buf.record(tagged(i));
    buf.end_episode();
    Rng a(99), b(99);
    for (int i = 0; i < 50; ++i) {
        auto ga = *buf.sample(8, a);
        auto gb = *buf.sample(8, b);
        for (std::size_t j = 0; j < ga.size(); ++j) CHECK(ga[j].reward == gb[j].reward);
    }
}

TEST_CASE("capacity is enforced and zero capacity rejected") {
    CHECK_THROWS_AS(DualReplayBuffer(0), ConfigError);
    DualReplayBuffer buf(5);
    for (int ep = 0; ep < 4; ++ep) {
        for (int i = 0; i < 3; ++i) buf.record(tagged(ep * 3 + i));
        buf.end_episode();
        CHECK(buf.back_size() <= 5);
    }
    CHECK(buf.back_size() == 5);
}
