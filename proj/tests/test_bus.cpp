#include <doctest.h>

#include <algorithm>
#include <set>
#include <thread>
#include <tuple>

#include "slio/bus.hpp"
#include "slio/mpsc_queue.hpp"

using namespace slio;

namespace {
std::vector<std::uint8_t> payload(std::uint8_t tag) { return {tag, 1, 2, 3}; }
}  // namespace

TEST_CASE("lossless zero-delay broadcast reaches all other drones at t_now") {
    SimBus bus({});
    for (int id : {1, 2, 3}) bus.register_drone(id);
    bus.send(1, payload(7), 1.0);
    for (int id : {2, 3}) {
        const auto got = bus.poll(id, 1.0);
        REQUIRE(got.size() == 1);
        CHECK(got[0].arrival_time == 1.0);
        CHECK(got[0].from_id == 1);
    }
    CHECK(bus.poll(1, 10.0).empty());  // no self-delivery
}

TEST_CASE("drop_prob 1 delivers nothing") {
    ChannelModel ch;
    ch.drop_prob = 1.0;
    SimBus bus(ch);
    bus.register_drone(1);
    bus.register_drone(2);
    for (int i = 0; i < 50; ++i) bus.send(1, payload(1), i * 0.1);
    CHECK(bus.poll(2, 100.0).empty());
}

TEST_CASE("drop_prob 0.2 delivers about 80 percent") {
    ChannelModel ch;
    ch.drop_prob = 0.2;
    ch.seed = 5;
    SimBus bus(ch);
    bus.register_drone(1);
    bus.register_drone(2);
    const int n = 100000;
    for (int i = 0; i < n; ++i) bus.send(1, payload(1), i * 1e-3);
    const auto got = bus.poll(2, 1e9);
    const double rate = static_cast<double>(got.size()) / n;
    CHECK(rate > 0.79);
    CHECK(rate < 0.81);
}

TEST_CASE("unregistered ids are rejected") {
    SimBus bus({});
    bus.register_drone(1);
    CHECK_THROWS_AS(bus.send(9, payload(0), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(bus.poll(9, 0.0), std::invalid_argument);
}

TEST_CASE("delayed messages only appear once their arrival time passes") {
    ChannelModel ch;
    ch.delay_mean = 0.5;
    SimBus bus(ch);
    bus.register_drone(1);
    bus.register_drone(2);
    bus.send(1, payload(1), 1.0);
    CHECK(bus.poll(2, 1.2).empty());
    const auto got = bus.poll(2, 1.6);
    REQUIRE(got.size() == 1);
    CHECK(got[0].arrival_time == doctest::Approx(1.5));
}

TEST_CASE("no duplication and deterministic traces across identical runs") {
    const auto run_once = [] {
        ChannelModel ch;
        ch.drop_prob = 0.3;
        ch.delay_mean = 0.05;
        ch.delay_jitter = 0.02;
        ch.seed = 77;
        SimBus bus(ch);
        for (int id : {1, 2, 3}) bus.register_drone(id);
        for (int k = 0; k < 200; ++k) {
            bus.send(1 + k % 3, payload(static_cast<std::uint8_t>(k)), 0.1 * k);
        }
        std::vector<std::tuple<int, int, std::uint32_t, double>> trace;
        for (int id : {1, 2, 3}) {
            for (const auto& d : bus.poll(id, 1e9)) {
                trace.emplace_back(d.to_id, d.from_id, d.bus_seq, d.arrival_time);
            }
        }
        return trace;
    };
    const auto a = run_once();
    const auto b = run_once();
    CHECK(a == b);

    // At most one delivery per (receiver, sender, seq).
    std::set<std::tuple<int, int, std::uint32_t>> seen;
    for (const auto& [to, from, seq, arrival] : a) {
        (void)arrival;
        CHECK(seen.insert({to, from, seq}).second);
    }
}

TEST_CASE("per-receiver FIFO ordering by (arrival, sender, seq)") {
    ChannelModel ch;
    ch.delay_mean = 0.1;
    ch.delay_jitter = 0.05;
    ch.seed = 3;
    SimBus bus(ch);
    for (int id : {1, 2, 3}) bus.register_drone(id);
    for (int k = 0; k < 50; ++k) {
        bus.send(1, payload(static_cast<std::uint8_t>(k)), 0.01 * k);
        bus.send(2, payload(static_cast<std::uint8_t>(k)), 0.01 * k);
    }
    const auto got = bus.poll(3, 1e9);
    for (size_t i = 1; i < got.size(); ++i) {
        const bool ordered =
            got[i - 1].arrival_time < got[i].arrival_time ||
            (got[i - 1].arrival_time == got[i].arrival_time &&
             (got[i - 1].from_id < got[i].from_id ||
              (got[i - 1].from_id == got[i].from_id && got[i - 1].bus_seq < got[i].bus_seq)));
        CHECK(ordered);
    }
}

TEST_CASE("concurrent senders produce the same delivery set as sequential ones") {
    const auto collect = [](SimBus& bus) {
        std::vector<std::tuple<int, std::uint32_t, double>> trace;
        for (const auto& d : bus.poll(3, 1e9)) {
            trace.emplace_back(d.from_id, d.bus_seq, d.arrival_time);
        }
        std::sort(trace.begin(), trace.end());
        return trace;
    };

    ChannelModel ch;
    ch.drop_prob = 0.1;
    ch.delay_mean = 0.02;
    ch.delay_jitter = 0.01;
    ch.seed = 11;

    SimBus sequential(ch);
    for (int id : {1, 2, 3}) sequential.register_drone(id);
    for (int k = 0; k < 500; ++k) {
        sequential.send(1, payload(1), 0.01 * k);
        sequential.send(2, payload(2), 0.01 * k);
    }

    SimBus threaded_bus(ch);
    for (int id : {1, 2, 3}) threaded_bus.register_drone(id);
    std::thread t1([&] {
        for (int k = 0; k < 500; ++k) threaded_bus.send(1, payload(1), 0.01 * k);
    });
    std::thread t2([&] {
        for (int k = 0; k < 500; ++k) threaded_bus.send(2, payload(2), 0.01 * k);
    });
    t1.join();
    t2.join();

    CHECK(collect(sequential) == collect(threaded_bus));
}

TEST_CASE("mpsc queue accepts concurrent producers") {
    MpscQueue<int> q;
    std::vector<std::thread> producers;
    for (int p = 0; p < 4; ++p) {
        producers.emplace_back([&q, p] {
            for (int i = 0; i < 1000; ++i) q.push(p * 1000 + i);
        });
    }
    for (auto& t : producers) t.join();
    const auto all = q.drain();
    CHECK(all.size() == 4000);
    CHECK(q.empty());
}
