#pragma once

#include <chrono>
#include <cmath>

namespace nrm {

class Stopwatch {
public:
    Stopwatch() : start_(clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_;
};

/// Wall-clock budget. An infinite (or non-finite) budget never expires.
class Deadline {
public:
    using clock = std::chrono::steady_clock;

    Deadline() : unlimited_(true) {}
    explicit Deadline(double seconds) {
        if (!std::isfinite(seconds)) {
            unlimited_ = true;
        } else {
            at_ = clock::now() + std::chrono::duration_cast<clock::duration>(
                                     std::chrono::duration<double>(seconds));
        }
    }

    bool unlimited() const { return unlimited_; }
    bool expired() const { return !unlimited_ && clock::now() >= at_; }
    double remaining() const {
        if (unlimited_) return INFINITY;
        return std::chrono::duration<double>(at_ - clock::now()).count();
    }
    /// Earlier of this deadline and `seconds` from now.
    Deadline sub(double seconds) const {
        Deadline d(seconds);
        if (unlimited_) return d;
        if (d.unlimited_ || at_ < d.at_) return *this;
        return d;
    }

private:
    bool unlimited_ = false;
    clock::time_point at_{};
};

}  // namespace nrm
