// Internal: streaming reduction of one replication into RepStats. Shared by
// the Euler and event-driven engines so both use the same post-warmup
// time-average convention.
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "qsim/trajectory.hpp"

namespace qsim::detail {

class RepAccumulator {
public:
    RepAccumulator(int nodes, int64_t intervals, double warmup_fraction,
                   const std::vector<int64_t>& checkpoints)
        : warmup_(static_cast<int64_t>(
              std::floor(warmup_fraction * static_cast<double>(intervals)))),
          total_(intervals),
          sums_(static_cast<size_t>(nodes), 0.0),
          checkpoints_(&checkpoints) {}

    void observe(int64_t tau, std::span<const int64_t> state) {
        if (tau > warmup_) {
            for (size_t i = 0; i < state.size(); ++i) {
                sums_[i] += static_cast<double>(state[i]);
            }
        }
        while (next_checkpoint_ < checkpoints_->size() &&
               (*checkpoints_)[next_checkpoint_] == tau) {
            stats_.checkpoint_states.emplace_back(state.begin(), state.end());
            ++next_checkpoint_;
        }
    }

    RepStats finish(std::span<const int64_t> terminal) {
        const auto denom = static_cast<double>(total_ - warmup_);
        stats_.node_time_avg.resize(sums_.size());
        stats_.system_time_avg = 0.0;
        for (size_t i = 0; i < sums_.size(); ++i) {
            stats_.node_time_avg[i] = sums_[i] / denom;
            stats_.system_time_avg += stats_.node_time_avg[i];
        }
        stats_.terminal_state.assign(terminal.begin(), terminal.end());
        return std::move(stats_);
    }

private:
    int64_t warmup_;
    int64_t total_;
    std::vector<double> sums_;
    const std::vector<int64_t>* checkpoints_;
    size_t next_checkpoint_ = 0;
    RepStats stats_;
};

}  // namespace qsim::detail
