#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "mofit/rng.hpp"

namespace mofit::scale {

/// What the firmware knows: zero offset, calibration slope, and the noise model of its
/// simulated load cell.
struct ScaleState {
  std::string device_id = "scale-1";
  std::int64_t offset_counts = 0;
  double counts_per_gram = 1.0;
  double noise_stddev_counts = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const ScaleState&) const = default;
};

class CalibrationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// offset_counts becomes raw_now (rounded to a whole count).
ScaleState tare(ScaleState state, double raw_now);

/// counts_per_gram = (raw_with_mass - offset) / known_mass_g.
ScaleState calibrate(ScaleState state, double known_mass_g, double raw_with_mass);

/// (raw - offset) / scale, unclamped and unrounded.
double grams_exact(const ScaleState& state, double raw);
/// Reported value: clamped at 0 and rounded to 0.1 g.
double grams_reported(const ScaleState& state, double raw);

/// The physical chain (load cell and ADC): raw counts for a true mass with seeded
/// Gaussian noise.
class LoadCell {
 public:
  LoadCell(double zero_counts, double counts_per_gram, double noise_stddev_counts, std::uint64_t seed);

  double raw(double true_mass_g);

 private:
  double zero_;
  double scale_;
  double noise_;
  Rng rng_;
};

/// A load cell whose physical parameters match `state` (the noiseless round-trip setup).
LoadCell matching_cell(const ScaleState& state);

/// Reading as reported by the firmware for a true mass on `cell`.
double read(const ScaleState& state, LoadCell& cell, double true_mass_g);

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{50};
  std::chrono::milliseconds max_backoff{2000};
  double multiplier = 2.0;
};

/// Delivers one JSON body to a service path; returns the HTTP status, or nothing when
/// the service could not be reached.
using Transport = std::function<std::optional<int>(const std::string& path, const std::string& body)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

Transport http_transport(const std::string& base_url, std::chrono::milliseconds timeout = std::chrono::seconds(5));

struct Queued {
  double grams = 0.0;
  std::int64_t timestamp_ms = 0;
};

enum class FlushStatus { delivered, unreachable, rejected };

struct FlushResult {
  FlushStatus status = FlushStatus::delivered;
  std::size_t sent = 0;
  std::string message;
};

/// Local queue in front of the service. Readings leave in enqueue order; a transport
/// failure keeps the head queued after the retry budget is spent.
class Publisher {
 public:
  Publisher(std::string device_id, Transport transport, RetryPolicy policy = {}, Sleeper sleep = {});

  /// Registers the device with the service (idempotent).
  bool register_device();
  /// Queues a reading. Timestamps are forced strictly increasing per device.
  Queued enqueue(double grams, std::int64_t timestamp_ms);
  /// Sends queued readings in order until the queue is empty or delivery fails.
  FlushResult flush();

  const std::deque<Queued>& queue() const { return queue_; }
  std::size_t delivered() const { return delivered_; }
  std::size_t dropped() const { return dropped_; }

 private:
  std::optional<int> send_with_retry(const std::string& path, const std::string& body);

  std::string device_id_;
  Transport transport_;
  RetryPolicy policy_;
  Sleeper sleep_;
  std::deque<Queued> queue_;
  std::optional<std::int64_t> last_timestamp_;
  std::size_t delivered_ = 0;
  std::size_t dropped_ = 0;
};

}  // namespace mofit::scale
