#pragma once
// Timestamp source. Everything that stamps provenance takes a Clock so runs
// can be made byte-reproducible.

#include <chrono>
#include <ctime>
#include <string>

namespace drawmap {

class Clock {
 public:
  virtual ~Clock() = default;
  /// ISO-8601 UTC, second resolution.
  virtual std::string now() const = 0;
};

class FixedClock final : public Clock {
 public:
  explicit FixedClock(std::string stamp = "1970-01-01T00:00:00Z") : stamp_(std::move(stamp)) {}
  std::string now() const override { return stamp_; }

 private:
  std::string stamp_;
};

class SystemClock final : public Clock {
 public:
  std::string now() const override {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }
};

}  // namespace drawmap
