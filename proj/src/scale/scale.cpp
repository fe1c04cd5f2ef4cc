#include "mofit/scale/scale.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

namespace mofit::scale {

ScaleState tare(ScaleState state, double raw_now) {
  state.offset_counts = std::llround(raw_now);
  return state;
}

ScaleState calibrate(ScaleState state, double known_mass_g, double raw_with_mass) {
  if (!(known_mass_g > 0.0) || !std::isfinite(known_mass_g)) throw CalibrationError("known mass must be > 0 g");
  const double span = raw_with_mass - static_cast<double>(state.offset_counts);
  if (!(span > 0.0)) {
    throw CalibrationError("raw reading with the mass must exceed the tare offset (" +
                           std::to_string(state.offset_counts) + ")");
  }
  state.counts_per_gram = span / known_mass_g;
  return state;
}

double grams_exact(const ScaleState& state, double raw) {
  return (raw - static_cast<double>(state.offset_counts)) / state.counts_per_gram;
}

double grams_reported(const ScaleState& state, double raw) {
  const double g = std::max(0.0, grams_exact(state, raw));
  return std::round(g * 10.0) / 10.0;
}

LoadCell::LoadCell(double zero_counts, double counts_per_gram, double noise_stddev_counts, std::uint64_t seed)
    : zero_(zero_counts), scale_(counts_per_gram), noise_(noise_stddev_counts), rng_(seed) {
  if (!(counts_per_gram > 0.0)) throw CalibrationError("counts per gram must be > 0");
  if (!(noise_stddev_counts >= 0.0)) throw CalibrationError("noise stddev must be >= 0");
}

double LoadCell::raw(double true_mass_g) {
  const double noise = noise_ > 0.0 ? rng_.normal(0.0, noise_) : 0.0;
  return zero_ + true_mass_g * scale_ + noise;
}

LoadCell matching_cell(const ScaleState& state) {
  return LoadCell(static_cast<double>(state.offset_counts), state.counts_per_gram, state.noise_stddev_counts,
                  state.seed);
}

double read(const ScaleState& state, LoadCell& cell, double true_mass_g) {
  return grams_reported(state, cell.raw(true_mass_g));
}

Transport http_transport(const std::string& base_url, std::chrono::milliseconds timeout) {
  auto client = std::make_shared<httplib::Client>(base_url);
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  return [client](const std::string& path, const std::string& body) -> std::optional<int> {
    const auto res = client->Post(path, body, "application/json");
    if (!res) return std::nullopt;
    return res->status;
  };
}

Publisher::Publisher(std::string device_id, Transport transport, RetryPolicy policy, Sleeper sleep)
    : device_id_(std::move(device_id)), transport_(std::move(transport)), policy_(policy), sleep_(std::move(sleep)) {
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (policy_.max_attempts < 1) throw std::invalid_argument("retry budget must allow at least one attempt");
}

std::optional<int> Publisher::send_with_retry(const std::string& path, const std::string& body) {
  auto backoff = policy_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    const auto status = transport_(path, body);
    const bool transient = !status || *status >= 500;
    if (!transient || attempt >= policy_.max_attempts) return status;
    sleep_(backoff);
    const auto next = std::chrono::milliseconds(static_cast<std::int64_t>(backoff.count() * policy_.multiplier));
    backoff = std::min(next, policy_.max_backoff);
  }
}

bool Publisher::register_device() {
  const auto status = send_with_retry("/scale/devices", nlohmann::json{{"device_id", device_id_}}.dump());
  return status && (*status == 200 || *status == 201);
}

Queued Publisher::enqueue(double grams, std::int64_t timestamp_ms) {
  if (last_timestamp_ && timestamp_ms <= *last_timestamp_) timestamp_ms = *last_timestamp_ + 1;
  last_timestamp_ = timestamp_ms;
  queue_.push_back({grams, timestamp_ms});
  return queue_.back();
}

FlushResult Publisher::flush() {
  FlushResult result;
  while (!queue_.empty()) {
    const auto& head = queue_.front();
    const auto body =
        nlohmann::json{{"device_id", device_id_}, {"grams", head.grams}, {"timestamp_ms", head.timestamp_ms}}.dump();
    const auto status = send_with_retry("/scale/readings", body);
    if (!status || *status >= 500) {
      result.status = FlushStatus::unreachable;
      result.message = status ? "service error " + std::to_string(*status) : "service unreachable";
      return result;
    }
    if (*status == 200 || *status == 201) {
      ++result.sent;
      ++delivered_;
    } else {
      // The service will never accept this reading; drop it so later ones can go.
      ++dropped_;
      result.status = FlushStatus::rejected;
      result.message = "reading at " + std::to_string(head.timestamp_ms) + " rejected with " + std::to_string(*status);
    }
    queue_.pop_front();
  }
  return result;
}

}  // namespace mofit::scale
