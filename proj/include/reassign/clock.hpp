#pragma once

#include <chrono>

namespace reassign {

/// Seconds, wall or logical depending on the clock that produced them.
using Duration = std::chrono::duration<double>;

class Clock {
 public:
  virtual ~Clock() = default;
  [[nodiscard]] virtual Duration now() const = 0;
};

class SteadyClock final : public Clock {
 public:
  [[nodiscard]] Duration now() const override {
    return std::chrono::duration_cast<Duration>(std::chrono::steady_clock::now().time_since_epoch());
  }
};

/// Advances only when told to.
class ManualClock final : public Clock {
 public:
  [[nodiscard]] Duration now() const override { return now_; }
  void advance(Duration d) { now_ += d; }

 private:
  Duration now_{0};
};

}  // namespace reassign
