#include "slio/bus.hpp"

#include <algorithm>
#include <stdexcept>

namespace slio {

void SimBus::register_drone(int id) {
    std::lock_guard lock(mutex_);
    pending_.try_emplace(id);
    send_counter_.try_emplace(id, 0);
    bytes_sent_.try_emplace(id, 0);
}

void SimBus::send(int from_id, std::span<const std::uint8_t> bytes, double t_now) {
    std::lock_guard lock(mutex_);
    auto counter = send_counter_.find(from_id);
    if (counter == send_counter_.end()) {
        throw std::invalid_argument("SimBus::send: unregistered sender id");
    }
    const std::uint32_t seq = counter->second++;
    bytes_sent_[from_id] += bytes.size();

    // Per-send randomness keyed on (seed, sender, per-sender counter) so the
    // trace does not depend on cross-sender call interleaving.
    Rng rng = Rng::derive(channel_.seed,
                          (static_cast<std::uint64_t>(from_id) << 32) | seq);

    for (auto& [to_id, queue] : pending_) {
        if (to_id == from_id) continue;
        const bool dropped = rng.bernoulli(channel_.drop_prob);
        const double delay =
            std::max(0.0, channel_.delay_mean + rng.normal(channel_.delay_jitter));
        if (dropped) continue;
        Delivery d;
        d.send_time = t_now;
        d.arrival_time = t_now + delay;
        d.from_id = from_id;
        d.to_id = to_id;
        d.bus_seq = seq;
        d.bytes.assign(bytes.begin(), bytes.end());
        queue.push_back(d);
        if (capture_enabled_) capture_.push_back(queue.back());
    }
}

std::vector<Delivery> SimBus::poll(int to_id, double t_now) {
    std::lock_guard lock(mutex_);
    auto it = pending_.find(to_id);
    if (it == pending_.end()) {
        throw std::invalid_argument("SimBus::poll: unregistered receiver id");
    }
    std::vector<Delivery>& queue = it->second;
    std::vector<Delivery> out;
    auto split = std::stable_partition(queue.begin(), queue.end(), [&](const Delivery& d) {
        return d.arrival_time > t_now;
    });
    out.assign(std::make_move_iterator(split), std::make_move_iterator(queue.end()));
    queue.erase(split, queue.end());
    std::sort(out.begin(), out.end(), [](const Delivery& a, const Delivery& b) {
        if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
        if (a.from_id != b.from_id) return a.from_id < b.from_id;
        return a.bus_seq < b.bus_seq;
    });
    return out;
}

std::uint64_t SimBus::bytes_sent(int id) const {
    std::lock_guard lock(mutex_);
    auto it = bytes_sent_.find(id);
    return it == bytes_sent_.end() ? 0 : it->second;
}

std::vector<Delivery> SimBus::capture_log() const {
    std::lock_guard lock(mutex_);
    return capture_;
}

}  // namespace slio
