#include "nafreach/replay.hpp"

#include "nafreach/errors.hpp"

namespace nafreach {

DualReplayBuffer::DualReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay: capacity must be positive");
}

void DualReplayBuffer::record(const Transition& t) {
    episode_.push_back(t);
}

void DualReplayBuffer::end_episode() {
    for (const Transition& t : episode_) {
        back_.push_back(t);
        if (back_.size() > capacity_) back_.pop_front();
    }
    episode_.clear();
}

std::optional<std::vector<Transition>> DualReplayBuffer::sample(std::size_t k, Rng& rng) const {
    if (back_.size() < k || k == 0) return std::nullopt;
    std::vector<Transition> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
        out.push_back(back_[rng.uniform_index(back_.size())]);
    return out;
}

} // namespace nafreach
