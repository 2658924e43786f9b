#pragma once

#include <cstdint>
#include <vector>

#include "qsim/errors.hpp"

namespace qsim {

struct ScheduleSegment {
    double t_start = 0.0;
    double value = 0.0;
};

// Piecewise-constant function of time on [0, horizon]: segment k applies on
// [t_start_k, t_start_{k+1}). The first segment must start at 0 and starts
// must be strictly increasing, so the schedule has no gaps or overlaps.
class PiecewiseConstant {
public:
    PiecewiseConstant() = default;
    explicit PiecewiseConstant(std::vector<ScheduleSegment> segments)
        : segments_(std::move(segments)) {}

    static PiecewiseConstant constant(double value) {
        return PiecewiseConstant({{0.0, value}});
    }

    void validate(const char* what) const {
        if (segments_.empty()) {
            throw SpecError(std::string(what) + ": schedule has no segments");
        }
        if (segments_.front().t_start != 0.0) {
            throw SpecError(std::string(what) + ": schedule must start at t = 0");
        }
        for (size_t k = 1; k < segments_.size(); ++k) {
            if (!(segments_[k].t_start > segments_[k - 1].t_start)) {
                throw SpecError(std::string(what) +
                                ": schedule breakpoints must be strictly increasing");
            }
        }
    }

    double value_at(double t) const {
        size_t k = segments_.size();
        while (k > 1 && segments_[k - 1].t_start > t) --k;
        return segments_[k - 1].value;
    }

    bool is_constant() const { return segments_.size() == 1; }

    const std::vector<ScheduleSegment>& segments() const { return segments_; }

private:
    std::vector<ScheduleSegment> segments_;
};

}  // namespace qsim
