#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "mofit/scale/scale.hpp"

namespace {

struct Step {
  std::int64_t offset_ms = 0;
  double grams = 0.0;
};

// Lines of "offset_ms,grams"; blank lines and '#' comments are skipped.
std::vector<Step> load_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schedule " + path);
  std::vector<Step> steps;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    Step s;
    char comma = 0;
    if (!(fields >> s.offset_ms >> comma >> s.grams) || comma != ',' || s.grams < 0 || s.offset_ms < 0) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 'offset_ms,grams' with both >= 0");
    }
    steps.push_back(s);
  }
  return steps;
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mofit::scale;
  CLI::App app{"Kitchen-scale simulator: tare, calibrate, weigh a scripted schedule and publish readings"};
  std::string device = "scale-1", url = "http://127.0.0.1:8080", schedule_path;
  double cell_scale = 420.0, cell_zero = 8400.0, noise = 0.0, calibration_mass = 100.0;
  std::uint64_t seed = 1;
  std::int64_t start_ms = -1;
  bool realtime = false;
  app.add_option("--device", device, "Device id")->capture_default_str();
  app.add_option("--url", url, "Service base URL")->capture_default_str();
  app.add_option("--scale", cell_scale, "Load-cell counts per gram")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--offset", cell_zero, "Load-cell raw counts with an empty pan")->capture_default_str();
  app.add_option("--noise", noise, "Gaussian noise stddev in counts")->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "Noise seed")->capture_default_str();
  app.add_option("--schedule", schedule_path, "File of 'offset_ms,grams' lines")->required()->check(CLI::ExistingFile);
  app.add_option("--start-ms", start_ms, "Timestamp of the first step (default: now)");
  app.add_option("--calibration-mass", calibration_mass, "Known mass used to calibrate, grams")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_flag("--realtime", realtime, "Wait between steps as scheduled");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto steps = load_schedule(schedule_path);
    LoadCell cell(cell_zero, cell_scale, noise, seed);
    ScaleState state;
    state.device_id = device;
    state.noise_stddev_counts = noise;
    state.seed = seed;
    state = tare(state, cell.raw(0.0));
    state = calibrate(state, calibration_mass, cell.raw(calibration_mass));
    std::cout << "tared at " << state.offset_counts << " counts, calibrated to " << state.counts_per_gram
              << " counts/g\n";

    Publisher publisher(device, http_transport(url));
    if (!publisher.register_device()) {
      std::cerr << "error: cannot register device '" << device << "' at " << url << "\n";
      return 1;
    }
    const std::int64_t t0 = start_ms >= 0 ? start_ms : now_ms();
    const auto wall0 = std::chrono::steady_clock::now();
    bool clean = true;
    for (const auto& step : steps) {
      if (realtime) std::this_thread::sleep_until(wall0 + std::chrono::milliseconds(step.offset_ms));
      const double grams = read(state, cell, step.grams);
      const auto q = publisher.enqueue(grams, t0 + step.offset_ms);
      const auto r = publisher.flush();
      std::cout << q.timestamp_ms << "," << grams << "\n";
      if (r.status != FlushStatus::delivered) {
        std::cerr << "warning: " << r.message << " (" << publisher.queue().size() << " queued)\n";
        clean = false;
      }
    }
    if (!publisher.queue().empty()) {
      const auto r = publisher.flush();
      if (r.status != FlushStatus::delivered) clean = false;
    }
    std::cout << "delivered " << publisher.delivered() << ", dropped " << publisher.dropped() << ", queued "
              << publisher.queue().size() << "\n";
    return clean ? 0 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
