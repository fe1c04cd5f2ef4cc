#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "mofit/service/registry.hpp"
#include "mofit/service/store.hpp"

namespace httplib {
class Server;
}

namespace mofit::service {

struct ServiceOptions {
  std::filesystem::path data_dir = "mofit-data";
  std::filesystem::path bundle_path;  // empty or missing: prediction endpoints answer 503
  std::filesystem::path foods_path;   // seed catalogue for a fresh store
};

/// The versioned API description compiled into the library.
std::string_view api_description();

/// Routes, persistence and the hot-swappable model registry behind one HTTP server.
class Service {
 public:
  explicit Service(ServiceOptions options);

  /// Registers every route on `server`.
  void mount(httplib::Server& server);

  /// Loads the bundle again and swaps it in; returns the new version.
  std::string reload();
  std::shared_ptr<const ModelRegistry> registry() const;
  Store& store() { return store_; }

 private:
  ServiceOptions options_;
  Store store_;
  mutable std::mutex registry_mutex_;
  std::shared_ptr<const ModelRegistry> registry_;
};

}  // namespace mofit::service
