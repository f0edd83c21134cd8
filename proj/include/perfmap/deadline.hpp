#pragma once

#include <chrono>
#include <stdexcept>

namespace perfmap {

class TimeoutError : public std::runtime_error {
 public:
  TimeoutError() : std::runtime_error("evaluation deadline exceeded") {}
};

/// Wall-clock budget checked cooperatively by long-running training loops.
class Deadline {
 public:
  using Clock = std::chrono::steady_clock;

  static Deadline never() { return Deadline(Clock::time_point::max()); }
  static Deadline after(std::chrono::duration<double> budget) {
    if (budget.count() <= 0 || budget.count() > 1e9) return never();
    return Deadline(Clock::now() +
                    std::chrono::duration_cast<Clock::duration>(budget));
  }

  bool expired() const { return at_ != Clock::time_point::max() && Clock::now() >= at_; }
  void check() const {
    if (expired()) throw TimeoutError();
  }

 private:
  explicit Deadline(Clock::time_point at) : at_(at) {}
  Clock::time_point at_;
};

}  // namespace perfmap
