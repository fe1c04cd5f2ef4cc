#include "mofit/service/server.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>

namespace mofit::service {

using nlohmann::json;
namespace fs = std::filesystem;

namespace detail {
extern const std::string_view kApiDescription;
}

std::string_view api_description() { return detail::kApiDescription; }

namespace {

struct HttpError {
  int status;
  std::string message;
};

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Runs `body` and maps every failure to a JSON error response.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& body) {
  try {
    body();
  } catch (const HttpError& e) {
    send(res, e.status, {{"error", e.message}});
  } catch (const StoreError& e) {
    send(res, e.status(), {{"error", e.what()}});
  } catch (const ValidationError& e) {
    json fields = json::array();
    for (const auto& f : e.fields()) fields.push_back({{"field", f.field}, {"message", f.message}});
    send(res, 400, {{"error", e.what()}, {"fields", fields}});
  } catch (const json::exception& e) {
    send(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
  } catch (const std::exception& e) {
    send(res, 500, {{"error", e.what()}});
  }
}

json parse_body(const httplib::Request& req) {
  json body;
  try {
    body = json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw HttpError{400, std::string("request body is not valid JSON: ") + e.what()};
  }
  if (!body.is_object()) throw HttpError{400, "request body must be a JSON object"};
  return body;
}

double number_field(const json& body, const char* key) {
  if (!body.contains(key) || !body.at(key).is_number()) throw HttpError{400, std::string(key) + " must be a number"};
  return body.at(key).get<double>();
}

std::string text_field(const json& body, const char* key) {
  if (!body.contains(key) || !body.at(key).is_string()) throw HttpError{400, std::string(key) + " must be a string"};
  return body.at(key).get<std::string>();
}

json user_json(const UserProfile& u) {
  return {{"user_id", u.user_id},
          {"start_weight_kg", u.start_weight_kg},
          {"goal_weight_kg", u.goal_weight_kg},
          {"start_date", format_date(u.start_date)},
          {"goal_date", format_date(u.goal_date)}};
}

json plan_json(const Store& store, const DietPlan& p) {
  json entries = json::array();
  for (const auto& e : p.entries) entries.push_back({{"food_id", e.food_id}, {"grams", e.grams}});
  return {{"plan_id", p.plan_id}, {"user_id", p.user_id}, {"entries", entries}, {"totals", to_json(store.plan_totals(p))}};
}

json food_json(const FoodItem& f) { return {{"food_id", f.food_id}, {"name", f.name}, {"per_100g", to_json(f.per_100g)}}; }

json reading_json(const ScaleReading& r) {
  return {{"device_id", r.device_id}, {"grams", r.grams}, {"timestamp_ms", r.timestamp_ms}};
}

std::string served_at() {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::system_clock::now().time_since_epoch());
  return std::to_string(ms.count());
}

}  // namespace

Service::Service(ServiceOptions options)
    : options_(std::move(options)),
      store_(options_.data_dir,
             options_.foods_path.empty() ? std::vector<FoodItem>{} : load_foods(options_.foods_path)) {
  if (!options_.bundle_path.empty() && fs::exists(options_.bundle_path)) reload();
}

std::string Service::reload() {
  if (options_.bundle_path.empty()) throw HttpError{503, "no bundle path configured"};
  auto fresh = std::make_shared<const ModelRegistry>(experiment::load_bundle(options_.bundle_path));
  std::lock_guard lock(registry_mutex_);
  registry_ = std::move(fresh);
  return registry_->version();
}

std::shared_ptr<const ModelRegistry> Service::registry() const {
  std::lock_guard lock(registry_mutex_);
  return registry_;
}

void Service::mount(httplib::Server& server) {
  auto models = [this] {
    auto r = registry();
    if (!r) throw HttpError{503, "no model bundle loaded"};
    return r;
  };

  server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("X-Served-At", served_at());
  });

  server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    auto r = registry();
    send(res, 200,
         {{"status", "ok"},
          {"bundle_version", r ? json(r->version()) : json(nullptr)},
          {"manifest_version", Manifest::builtin().version()}});
  });

  server.Get("/api.json", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(std::string(api_description()), "application/json");
  });

  server.Get("/schema", [models](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, models()->input_schema()); });
  });

  server.Post("/predict/obesity", [models](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto r = models();
      const auto p = r->predict_obesity(parse_body(req));
      json probs = json::object();
      for (const auto& [label, prob] : p.probabilities) probs[label] = prob;
      send(res, 200, {{"bundle_version", r->version()}, {"label", p.label}, {"probabilities", probs}});
    });
  });

  server.Post("/predict/weight", [models](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto r = models();
      send(res, 200, {{"bundle_version", r->version()}, {"weight_kg", r->predict_weight(parse_body(req))}});
    });
  });

  server.Post("/predict/bodyfat", [models](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto r = models();
      const auto p = r->predict_bodyfat(parse_body(req));
      json body = {{"bundle_version", r->version()}, {"bodyfat_percent", p.percent}, {"clamped", p.clamped}};
      if (p.clamped) {
        body["raw_percent"] = p.raw;
        body["warning"] = "model output outside the physiological band; clamped";
      }
      send(res, 200, body);
    });
  });

  server.Post("/users", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      UserProfile u;
      if (body.contains("user_id")) u.user_id = text_field(body, "user_id");
      u.start_weight_kg = number_field(body, "start_weight_kg");
      u.goal_weight_kg = number_field(body, "goal_weight_kg");
      u.start_date = parse_date(text_field(body, "start_date"));
      u.goal_date = parse_date(text_field(body, "goal_date"));
      send(res, 201, user_json(store_.create_user(u)));
    });
  });

  server.Get(R"(/users/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, user_json(store_.user(req.matches[1]))); });
  });

  server.Post(R"(/users/([^/]+)/progress)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const auto body = parse_body(req);
      const auto day = parse_date(text_field(body, "date"));
      const auto kg = number_field(body, "actual_weight_kg");
      store_.add_progress(id, day, kg);
      send(res, 201,
           {{"user_id", id}, {"date", format_date(day)}, {"actual_weight_kg", kg},
            {"target_kg", store_.user(id).target_on(day)}});
    });
  });

  server.Get(R"(/users/([^/]+)/progress)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const auto u = store_.user(id);
      const auto s = store_.progress_series(id);
      json dates = json::array();
      for (auto d : s.dates) dates.push_back(format_date(d));
      send(res, 200,
           {{"user_id", id},
            {"start_date", format_date(u.start_date)},
            {"goal_date", format_date(u.goal_date)},
            {"start_weight_kg", u.start_weight_kg},
            {"goal_weight_kg", u.goal_weight_kg},
            {"dates", dates},
            {"actual", s.actual},
            {"target", s.target},
            {"final_gap_kg", s.actual.empty() ? json(nullptr) : json(s.actual.back() - s.target.back())}});
    });
  });

  server.Get("/foods", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json foods = json::array();
      for (const auto& f : store_.foods()) foods.push_back(food_json(f));
      send(res, 200, {{"foods", foods}});
    });
  });

  server.Post("/foods", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      if (!body.contains("per_100g") || !body.at("per_100g").is_object()) throw HttpError{400, "per_100g must be an object"};
      const auto& m = body.at("per_100g");
      FoodItem f{text_field(body, "food_id"), text_field(body, "name"),
                 {number_field(m, "kcal"), number_field(m, "protein_g"), number_field(m, "carbs_g"),
                  number_field(m, "fat_g")}};
      send(res, 201, food_json(store_.add_food(f)));
    });
  });

  server.Post("/plans", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      if (!body.contains("entries") || !body.at("entries").is_array()) throw HttpError{400, "entries must be an array"};
      std::vector<PlanEntry> entries;
      for (const auto& e : body.at("entries")) {
        if (!e.is_object()) throw HttpError{400, "each entry must be an object"};
        entries.push_back({text_field(e, "food_id"), number_field(e, "grams")});
      }
      send(res, 201, plan_json(store_, store_.create_plan(text_field(body, "user_id"), entries)));
    });
  });

  server.Get(R"(/plans/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, plan_json(store_, store_.plan(req.matches[1]))); });
  });

  server.Get(R"(/plans/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      send(res, 200, store_.export_plan(id));
      res.set_header("Content-Disposition", "attachment; filename=\"" + id + ".json\"");
    });
  });

  server.Post("/scale/devices", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto id = text_field(parse_body(req), "device_id");
      const bool created = store_.register_device(id);
      send(res, created ? 201 : 200, {{"device_id", id}, {"registered", true}});
    });
  });

  server.Post("/scale/readings", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      if (!body.contains("timestamp_ms") || !body.at("timestamp_ms").is_number_integer()) {
        throw HttpError{400, "timestamp_ms must be an integer"};
      }
      const ScaleReading r{text_field(body, "device_id"), number_field(body, "grams"),
                           body.at("timestamp_ms").get<std::int64_t>()};
      store_.ingest_reading(r);
      send(res, 201, reading_json(r));
    });
  });

  server.Get(R"(/scale/([^/]+)/latest)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, reading_json(store_.latest_reading(req.matches[1]))); });
  });

  server.Get(R"(/scale/([^/]+)/nutrition)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("food")) throw HttpError{400, "query parameter 'food' is required"};
      const std::string device = req.matches[1];
      const auto food = req.get_param_value("food");
      const auto r = store_.latest_reading(device);
      send(res, 200,
           {{"device_id", device},
            {"food_id", food},
            {"grams", r.grams},
            {"timestamp_ms", r.timestamp_ms},
            {"macros", to_json(store_.food(food).for_grams(r.grams))}});
    });
  });

  server.Post("/admin/reload", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, {{"bundle_version", reload()}}); });
  });

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send(res, res.status, {{"error", httplib::status_message(res.status)}});
  });
}

}  // namespace mofit::service
