#pragma once

#include <deque>
#include <mutex>
#include <vector>

namespace slio {

/// Multi-producer single-consumer queue: pushes may come from any thread,
/// the owning agent drains on its own thread.
template <typename T>
class MpscQueue {
public:
    void push(T value) {
        std::lock_guard lock(mutex_);
        items_.push_back(std::move(value));
    }

    std::vector<T> drain() {
        std::lock_guard lock(mutex_);
        std::vector<T> out(std::make_move_iterator(items_.begin()),
                           std::make_move_iterator(items_.end()));
        items_.clear();
        return out;
    }

    bool empty() const {
        std::lock_guard lock(mutex_);
        return items_.empty();
    }

private:
    mutable std::mutex mutex_;
    std::deque<T> items_;
};

}  // namespace slio
