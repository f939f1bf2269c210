#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "nafreach/agent.hpp"
#include "nafreach/rng.hpp"

namespace nafreach {

// Current-episode transitions are isolated from sampling; at episode end they
// are copied into a bounded FIFO back buffer which training draws from.
class DualReplayBuffer {
  public:
    explicit DualReplayBuffer(std::size_t capacity = 100000);

    void record(const Transition& t);
    void end_episode();

    // k uniform draws with replacement; nullopt while the back buffer holds
    // fewer than k transitions ("not ready", trainer skips the update)
    std::optional<std::vector<Transition>> sample(std::size_t k, Rng& rng) const;

    std::size_t episode_size() const { return episode_.size(); }
    std::size_t back_size() const { return back_.size(); }
    std::size_t capacity() const { return capacity_; }

  private:
    std::size_t capacity_;
    std::vector<Transition> episode_;
    std::deque<Transition> back_;
};

} // namespace nafreach
