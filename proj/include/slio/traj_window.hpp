#pragma once

#include <Eigen/Core>
#include <deque>
#include <utility>
#include <vector>

namespace slio {

/// Sliding window of the most recent timestamped positions, used both for
/// tracked objects and for teammate trajectories received over the network.
class TrajWindow {
public:
    struct Entry {
        double timestamp = 0.0;
        Eigen::Vector3d position = Eigen::Vector3d::Zero();
    };

    explicit TrajWindow(size_t capacity = 100) : capacity_(capacity) {}

    /// Appends an entry; entries must arrive in strictly increasing time
    /// order, stale ones are ignored. Oldest entries fall off at capacity.
    bool push(double timestamp, const Eigen::Vector3d& position) {
        if (!entries_.empty() && timestamp <= entries_.back().timestamp) return false;
        entries_.push_back({timestamp, position});
        while (entries_.size() > capacity_) entries_.pop_front();
        return true;
    }

    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    size_t capacity() const { return capacity_; }
    const Entry& operator[](size_t i) const { return entries_[i]; }
    const Entry& back() const { return entries_.back(); }
    void clear() { entries_.clear(); }

    /// Positions as a 3xN matrix (column per entry, time-ordered).
    Eigen::Matrix3Xd positions() const {
        Eigen::Matrix3Xd m(3, entries_.size());
        for (size_t i = 0; i < entries_.size(); ++i) m.col(i) = entries_[i].position;
        return m;
    }

private:
    size_t capacity_;
    std::deque<Entry> entries_;
};

/// Greedy monotone matching of entries whose timestamps differ by at most
/// `tol`; each entry is used at most once. Both windows are time-ordered so
/// a two-pointer sweep suffices.
inline std::vector<std::pair<size_t, size_t>> associate_by_time(const TrajWindow& a,
                                                                const TrajWindow& b,
                                                                double tol) {
    std::vector<std::pair<size_t, size_t>> pairs;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double dt = a[i].timestamp - b[j].timestamp;
        if (dt > tol) {
            ++j;
        } else if (dt < -tol) {
            ++i;
        } else {
            pairs.emplace_back(i, j);
            ++i;
            ++j;
        }
    }
    return pairs;
}

}  // namespace slio
