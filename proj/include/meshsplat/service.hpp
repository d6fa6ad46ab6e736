#pragma once

#include <memory>
#include <string>

#include "meshsplat/app.hpp"

namespace meshsplat::app {

inline constexpr std::size_t kMaxDisplayPoints = 200000;
inline constexpr int kDefaultPreviewSize = 512;
inline constexpr const char* kDefaultHost = "127.0.0.1";
inline constexpr int kDefaultPort = 8080;

struct ServiceOptions {
  std::string host = kDefaultHost;
  int port = kDefaultPort;  // 0 picks a free port
  std::string static_dir;
};

/// Applies MESHSPLAT_HOST and MESHSPLAT_PORT when set.
ServiceOptions options_from_environment(ServiceOptions base = {});

/// One in-memory alignment session behind a local HTTP API. Reads run
/// concurrently; mutations take the writer lock one at a time, so the last
/// transform written wins.
///
///   GET  /session                   JSON: id, transform, counts, cloud URLs, images, pairs
///   GET  /session/cloud/sampled     display buffer of the mesh cloud (mesh frame)
///   GET  /session/cloud/sfm         display buffer of the SfM cloud
///   GET  /session/transform         JSON transform
///   PUT  /session/transform         JSON transform; 400 if invalid
///   POST /session/correspondences   {"clear":bool,"remove":[i...],"add":[{"sampled":[3],"sfm":[3]}]}
///   POST /session/estimate          fit to the pairs; 409 with fewer than 3; not applied
///   POST /session/merge             full-resolution apply + merge + write outputs
///   GET  /session/preview?image_id=N[&max_size=S]   PNG
class AlignmentService {
 public:
  /// Loads and samples every input; throws like run_pipeline.
  explicit AlignmentService(PipelineConfig config);
  ~AlignmentService();
  AlignmentService(const AlignmentService&) = delete;
  AlignmentService& operator=(const AlignmentService&) = delete;

  /// Binds and returns the port actually in use.
  int bind(const ServiceOptions& options);
  /// Blocks until stop().
  void listen();
  void stop();

  const std::string& session_id() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace meshsplat::app
