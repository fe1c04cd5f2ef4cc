#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "mofit/service/server.hpp"

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction, progress, diet-plan and scale-ingestion service"};
  std::string host = env_or("MOFIT_HOST", "127.0.0.1");
  int port = std::atoi(env_or("MOFIT_PORT", "8080").c_str());
  mofit::service::ServiceOptions options;
  options.data_dir = env_or("MOFIT_DATA", "mofit-data");
  options.bundle_path = env_or("MOFIT_BUNDLE", "");
  options.foods_path = env_or("MOFIT_FOODS", MOFIT_DEFAULT_FOODS);
  std::string data_dir = options.data_dir.string(), bundle = options.bundle_path.string(),
              foods = options.foods_path.string();
  app.add_option("--host", host, "Bind address (env MOFIT_HOST)")->capture_default_str();
  app.add_option("--port", port, "Port, 0 picks a free one (env MOFIT_PORT)")->capture_default_str();
  app.add_option("--data-dir", data_dir, "Store directory (env MOFIT_DATA)")->capture_default_str();
  app.add_option("--bundle", bundle, "Model bundle file (env MOFIT_BUNDLE)");
  app.add_option("--foods", foods, "Seed food catalogue for a new store (env MOFIT_FOODS)")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  options.data_dir = data_dir;
  options.bundle_path = bundle;
  options.foods_path = foods;

  // Block termination signals in every thread; a dedicated thread waits for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  try {
    mofit::service::Service service(options);
    httplib::Server server;
    service.mount(server);
    const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) {
      std::cerr << "error: cannot bind " << host << ":" << port << "\n";
      return 1;
    }
    const auto model = service.registry();
    std::cout << "listening on " << host << ":" << bound << " (bundle "
              << (model ? model->version() : std::string("none")) << ", data " << options.data_dir.string() << ")"
              << std::endl;
    std::thread stopper([&] {
      int sig = 0;
      sigwait(&signals, &sig);
      server.stop();
    });
    server.listen_after_bind();
    service.store().compact();
    if (stopper.joinable()) {
      pthread_kill(stopper.native_handle(), SIGTERM);
      stopper.join();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
