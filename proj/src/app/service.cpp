#include "meshsplat/service.hpp"

#include <cstdlib>
#include <mutex>
#include <random>
#include <shared_mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "meshsplat/error.hpp"
#include "meshsplat/splat_preview.hpp"

namespace meshsplat::app {
namespace {

using nlohmann::json;

struct Correspondence {
  Eigen::Vector3d sampled;
  Eigen::Vector3d sfm;
};

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void http_fail(int status, std::string code, std::string message) {
  throw HttpError{status, std::move(code), std::move(message)};
}

json error_body(const std::string& code, const std::string& message) {
  return {{"error", code}, {"message", message}};
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    http_fail(400, "InvalidArgument", std::string("body is not JSON: ") + e.what());
  }
}

Eigen::Vector3d vec3(const json& value, const char* what) {
  if (!value.is_array() || value.size() != 3)
    http_fail(400, "InvalidArgument", std::string(what) + " must be an array of 3 numbers");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!value[static_cast<std::size_t>(i)].is_number())
      http_fail(400, "InvalidArgument", std::string(what) + " must be an array of 3 numbers");
    v[i] = value[static_cast<std::size_t>(i)].get<double>();
  }
  if (!v.allFinite()) http_fail(400, "InvalidArgument", std::string(what) + " must be finite");
  return v;
}

json vec_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

std::string random_session_id() {
  std::random_device device;
  std::uniform_int_distribution<int> digit(0, 15);
  std::string id(16, '0');
  for (char& c : id) c = "0123456789abcdef"[digit(device)];
  return id;
}

}  // namespace

ServiceOptions options_from_environment(ServiceOptions base) {
  if (const char* host = std::getenv("MESHSPLAT_HOST"); host && *host) base.host = host;
  if (const char* port = std::getenv("MESHSPLAT_PORT"); port && *port) {
    char* end = nullptr;
    const long value = std::strtol(port, &end, 10);
    if (*end != '\0' || value < 0 || value > 65535)
      fail(ErrorCode::ConfigError, std::string("MESHSPLAT_PORT is not a port number: ") + port);
    base.port = static_cast<int>(value);
  }
  return base;
}

struct AlignmentService::Impl {
  PipelineConfig config;
  PreparedClouds prepared;
  std::string id = random_session_id();
  PointCloud display_sampled;
  PointCloud display_sfm;
  Bytes sampled_buffer;
  Bytes sfm_buffer;

  mutable std::shared_mutex mutex;
  SimilarityTransformd transform;
  json transform_doc;
  std::vector<Correspondence> pairs;

  httplib::Server server;

  explicit Impl(PipelineConfig c) : config(std::move(c)) {
    validate_config(config);
    transform = config.transform_path.empty() ? SimilarityTransformd::identity() : load_transform(config.transform_path);
    transform_doc = json::parse(transform_to_json(transform));
    prepared = prepare_clouds(config);
    display_sampled = decimate(prepared.sampled, kMaxDisplayPoints);
    display_sfm = decimate(prepared.sfm, kMaxDisplayPoints);
    sampled_buffer = encode_cloud_buffer(display_sampled);
    sfm_buffer = encode_cloud_buffer(display_sfm);
    routes();
  }

  json pairs_json() const {
    json out = json::array();
    for (const auto& p : pairs) out.push_back({{"sampled", vec_json(p.sampled)}, {"sfm", vec_json(p.sfm)}});
    return out;
  }

  json session_json() const {
    json images = json::array();
    for (const auto& [image_id, image] : prepared.model.images) images.push_back({{"id", image_id}, {"name", image.name}});
    auto cloud_info = [](const PointCloud& full, const PointCloud& shown, const char* url) {
      return json{{"count", full.size()}, {"display_count", shown.size()}, {"url", url}};
    };
    return {{"id", id},
            {"transform", transform_doc},
            {"clouds",
             {{"sampled", cloud_info(prepared.sampled, display_sampled, "/session/cloud/sampled")},
              {"sfm", cloud_info(prepared.sfm, display_sfm, "/session/cloud/sfm")}}},
            {"images", images},
            {"correspondences", pairs_json()}};
  }

  void put_transform(const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    SimilarityTransformd parsed;
    try {
      parsed = transform_from_json(req.body);
    } catch (const Error& e) {
      http_fail(400, std::string(to_string(e.code())), e.what());
    }
    const json doc = {{"scale", body.at("scale")},
                      {"rotation", body.at("rotation")},
                      {"translation", body.at("translation")}};
    std::unique_lock lock(mutex);
    transform = parsed;
    transform_doc = doc;
    send_json(res, transform_doc);
  }

  void post_correspondences(const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    if (!body.is_object()) http_fail(400, "InvalidArgument", "body must be a JSON object");
    std::vector<Correspondence> added;
    if (body.contains("add")) {
      if (!body["add"].is_array()) http_fail(400, "InvalidArgument", "'add' must be an array");
      for (const auto& item : body["add"]) {
        if (!item.is_object() || !item.contains("sampled") || !item.contains("sfm"))
          http_fail(400, "InvalidArgument", "each pair needs 'sampled' and 'sfm'");
        added.push_back({vec3(item["sampled"], "sampled"), vec3(item["sfm"], "sfm")});
      }
    }
    std::vector<std::size_t> removed;
    if (body.contains("remove")) {
      if (!body["remove"].is_array()) http_fail(400, "InvalidArgument", "'remove' must be an array");
      for (const auto& item : body["remove"]) {
        if (!item.is_number_unsigned()) http_fail(400, "InvalidArgument", "'remove' takes pair indices");
        removed.push_back(item.get<std::size_t>());
      }
    }
    const bool clear = body.value("clear", false);

    // Applied as clear, then remove (indices into the list before this
    // request), then add; a bad index leaves the list untouched.
    std::unique_lock lock(mutex);
    std::vector<Correspondence> next = clear ? std::vector<Correspondence>{} : pairs;
    std::sort(removed.begin(), removed.end(), std::greater<>());
    removed.erase(std::unique(removed.begin(), removed.end()), removed.end());
    for (std::size_t index : removed) {
      if (index >= next.size()) http_fail(400, "InvalidArgument", "no pair with index " + std::to_string(index));
      next.erase(next.begin() + static_cast<std::ptrdiff_t>(index));
    }
    next.insert(next.end(), added.begin(), added.end());
    pairs = std::move(next);
    send_json(res, {{"correspondences", pairs_json()}});
  }

  void post_estimate(httplib::Response& res) {
    std::vector<Correspondence> snapshot;
    {
      std::shared_lock lock(mutex);
      snapshot = pairs;
    }
    if (snapshot.size() < 3)
      http_fail(409, "TooFewCorrespondences",
                "need at least 3 correspondences, have " + std::to_string(snapshot.size()));
    Eigen::Matrix3Xd source(3, static_cast<Eigen::Index>(snapshot.size()));
    Eigen::Matrix3Xd target(3, static_cast<Eigen::Index>(snapshot.size()));
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
      source.col(static_cast<Eigen::Index>(i)) = snapshot[i].sampled;
      target.col(static_cast<Eigen::Index>(i)) = snapshot[i].sfm;
    }
    SimilarityEstimate<double> estimate;
    try {
      estimate = estimate_similarity<double>(source, target);
    } catch (const Error& e) {
      http_fail(400, std::string(to_string(e.code())), e.what());
    }
    send_json(res, {{"transform", json::parse(transform_to_json(estimate.transform))},
                    {"residual_rms", estimate.residual_rms}});
  }

  void post_merge(httplib::Response& res) {
    // Holding the writer lock keeps a concurrent PUT from landing mid-write.
    std::unique_lock lock(mutex);
    PipelineSummary summary = prepared.summary;
    const auto written = write_outputs(prepared, transform, config, &summary);
    send_json(res, {{"outputs", written}, {"merged_points", summary.merged_points}});
  }

  void get_preview(const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("image_id")) http_fail(400, "InvalidArgument", "image_id is required");
    std::uint32_t image_id = 0;
    int max_size = kDefaultPreviewSize;
    try {
      image_id = static_cast<std::uint32_t>(std::stoul(req.get_param_value("image_id")));
      if (req.has_param("max_size")) max_size = std::stoi(req.get_param_value("max_size"));
    } catch (const std::exception&) {
      http_fail(400, "InvalidArgument", "image_id and max_size must be integers");
    }
    if (max_size < 1 || max_size > 4096) http_fail(400, "InvalidArgument", "max_size must be in [1, 4096]");
    if (!prepared.model.images.count(image_id))
      http_fail(400, "InvalidArgument", "no image with id " + std::to_string(image_id));

    SimilarityTransformd current;
    {
      std::shared_lock lock(mutex);
      current = transform;
    }
    PreviewCamera camera = camera_from_model(prepared.model, image_id);
    const double longest = static_cast<double>(std::max(camera.intrinsics.width, camera.intrinsics.height));
    const double factor = std::min(1.0, max_size / longest);
    const int width = std::max(1, static_cast<int>(std::lround(camera.intrinsics.width * factor)));
    const int height = std::max(1, static_cast<int>(std::lround(camera.intrinsics.height * factor)));
    camera.intrinsics.fx *= width / static_cast<double>(camera.intrinsics.width);
    camera.intrinsics.cx *= width / static_cast<double>(camera.intrinsics.width);
    camera.intrinsics.fy *= height / static_cast<double>(camera.intrinsics.height);
    camera.intrinsics.cy *= height / static_cast<double>(camera.intrinsics.height);

    const PointCloud cloud = merge_clouds(apply_similarity(display_sampled, current), display_sfm);
    if (cloud.empty()) http_fail(400, "EmptyCloud", "nothing to render");
    const Bytes png = encode_png(to_rgb8(render_preview(init_gaussians(cloud), camera, width, height)));
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const HttpError& e) {
        send_json(res, error_body(e.code, e.message), e.status);
      } catch (const json::exception& e) {
        send_json(res, error_body("InvalidArgument", e.what()), 400);
      }
    };
  }

  void routes() {
    server.Get("/session", guarded([this](const httplib::Request&, httplib::Response& res) {
                 std::shared_lock lock(mutex);
                 send_json(res, session_json());
               }));
    server.Get("/session/cloud/sampled", guarded([this](const httplib::Request&, httplib::Response& res) {
                 res.set_content(reinterpret_cast<const char*>(sampled_buffer.data()), sampled_buffer.size(),
                                 "application/octet-stream");
               }));
    server.Get("/session/cloud/sfm", guarded([this](const httplib::Request&, httplib::Response& res) {
                 res.set_content(reinterpret_cast<const char*>(sfm_buffer.data()), sfm_buffer.size(),
                                 "application/octet-stream");
               }));
    server.Get("/session/transform", guarded([this](const httplib::Request&, httplib::Response& res) {
                 std::shared_lock lock(mutex);
                 send_json(res, transform_doc);
               }));
    server.Put("/session/transform",
               guarded([this](const httplib::Request& req, httplib::Response& res) { put_transform(req, res); }));
    server.Post("/session/correspondences", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  post_correspondences(req, res);
                }));
    server.Post("/session/estimate",
                guarded([this](const httplib::Request&, httplib::Response& res) { post_estimate(res); }));
    server.Post("/session/merge",
                guarded([this](const httplib::Request&, httplib::Response& res) { post_merge(res); }));
    server.Get("/session/preview",
               guarded([this](const httplib::Request& req, httplib::Response& res) { get_preview(req, res); }));

    // Module errors that escape a handler keep their code; anything else is
    // reported without detail.
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const Error& e) {
        send_json(res, error_body(std::string(to_string(e.code())), e.what()), 500);
      } catch (...) {
        send_json(res, error_body("Internal", "internal error"), 500);
      }
    });
  }
};

AlignmentService::AlignmentService(PipelineConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

AlignmentService::~AlignmentService() { stop(); }

int AlignmentService::bind(const ServiceOptions& options) {
  if (!options.static_dir.empty() && !impl_->server.set_mount_point("/", options.static_dir))
    fail(ErrorCode::ConfigError, "static directory '" + options.static_dir + "' does not exist");
  int port = options.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(options.host);
  } else if (!impl_->server.bind_to_port(options.host, port)) {
    port = -1;
  }
  if (port < 0)
    fail(ErrorCode::IoError, "cannot bind " + options.host + ":" + std::to_string(options.port));
  return port;
}

void AlignmentService::listen() { impl_->server.listen_after_bind(); }

void AlignmentService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

const std::string& AlignmentService::session_id() const { return impl_->id; }

}  // namespace meshsplat::app
