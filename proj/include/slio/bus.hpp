#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "slio/rng.hpp"

namespace slio {

struct ChannelModel {
    double drop_prob = 0.0;
    double delay_mean = 0.0;   // s
    double delay_jitter = 0.0; // s, std of Gaussian jitter
    std::uint64_t seed = 0;
};

struct Delivery {
    double send_time = 0.0;
    double arrival_time = 0.0;
    int from_id = 0;
    int to_id = 0;
    std::uint32_t bus_seq = 0;  // per-sender send counter
    std::vector<std::uint8_t> bytes;
};

/// Simulated broadcast datagram bus with independent per-link drop and
/// delay. Deliveries are deterministic given the seed and the per-sender
/// send order: the randomness for a send is derived from (seed, sender,
/// sender-send-counter), not from global call order, so multi-threaded
/// senders reproduce the single-threaded trace.
class SimBus {
public:
    explicit SimBus(const ChannelModel& channel) : channel_(channel) {}

    void register_drone(int id);

    /// Broadcasts to every other registered drone; each link independently
    /// drops or delays. Thread-safe. Throws on unregistered sender.
    void send(int from_id, std::span<const std::uint8_t> bytes, double t_now);

    /// Messages for `to_id` with arrival_time <= t_now, FIFO by
    /// (arrival_time, sender id, sender seq). Thread-safe per receiver.
    /// Throws on unregistered receiver.
    std::vector<Delivery> poll(int to_id, double t_now);

    /// Wire bytes handed to the radio by this sender (one count per
    /// broadcast, not per receiver).
    std::uint64_t bytes_sent(int id) const;

    void enable_capture(bool on) { capture_enabled_ = on; }
    /// All scheduled deliveries, in send order (capture must be enabled).
    std::vector<Delivery> capture_log() const;

private:
    ChannelModel channel_;
    mutable std::mutex mutex_;
    std::map<int, std::vector<Delivery>> pending_;   // per receiver
    std::map<int, std::uint32_t> send_counter_;
    std::map<int, std::uint64_t> bytes_sent_;
    bool capture_enabled_ = false;
    std::vector<Delivery> capture_;
};

}  // namespace slio
