#include "meshsplat/registration.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "meshsplat/detail/parallel.hpp"
#include "meshsplat/mesh_io.hpp"

namespace meshsplat {

using nlohmann::json;

PointCloud apply_similarity(const PointCloud& cloud, const SimilarityTransformd& transform) {
  transform.validate();
  check_cloud(cloud);
  if (transform.is_identity()) return cloud;

  PointCloud out;
  out.resize(cloud.size());
  out.colors = cloud.colors;
  const Eigen::Matrix3d r = transform.rotation.toRotationMatrix();
  const Eigen::Matrix3d sr = transform.scale * r;
  detail::parallel_for(0, static_cast<std::size_t>(cloud.size()), [&](std::size_t lo, std::size_t hi) {
    for (auto i = static_cast<Eigen::Index>(lo); i < static_cast<Eigen::Index>(hi); ++i) {
      const Eigen::Vector3d p = cloud.positions.row(i).transpose().cast<double>();
      out.positions.row(i) = (sr * p + transform.translation).cast<float>().transpose();
      const Eigen::Vector3d n = cloud.normals.row(i).transpose().cast<double>();
      if (n.isZero(0.0)) {
        out.normals.row(i).setZero();
      } else {
        out.normals.row(i) = (r * n).normalized().cast<float>().transpose();
      }
    }
  });
  return out;
}

PointCloud merge_clouds(const PointCloud& sampled, const PointCloud& sfm) {
  check_cloud(sampled);
  check_cloud(sfm);
  PointCloud out;
  out.resize(sampled.size() + sfm.size());
  out.positions << sfm.positions, sampled.positions;
  out.normals << sfm.normals, sampled.normals;
  out.colors << sfm.colors, sampled.colors;
  return out;
}

std::string transform_to_json(const SimilarityTransformd& t) {
  const json doc = {
      {"scale", t.scale},
      {"rotation", {t.rotation.w(), t.rotation.x(), t.rotation.y(), t.rotation.z()}},
      {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}},
  };
  return doc.dump(2);
}

SimilarityTransformd transform_from_json(const std::string& text) {
  SimilarityTransformd t;
  try {
    const json doc = json::parse(text);
    const auto& rot = doc.at("rotation");
    const auto& tr = doc.at("translation");
    if (!rot.is_array() || rot.size() != 4 || !tr.is_array() || tr.size() != 3)
      fail(ErrorCode::InvalidTransform, "rotation must have 4 entries and translation 3");
    t.scale = doc.at("scale").get<double>();
    t.rotation = Eigen::Quaterniond(rot[0].get<double>(), rot[1].get<double>(), rot[2].get<double>(),
                                    rot[3].get<double>());
    t.translation = Eigen::Vector3d(tr[0].get<double>(), tr[1].get<double>(), tr[2].get<double>());
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidTransform, std::string("bad transform JSON: ") + e.what());
  }
  t.validate();
  return t;
}

std::string transform_to_matrix_text(const SimilarityTransformd& t) {
  const Eigen::Matrix4d m = t.matrix();
  std::string out;
  char buf[40];
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
      out += buf;
      out += c == 3 ? '\n' : ' ';
    }
  }
  return out;
}

SimilarityTransformd transform_from_matrix_text(const std::string& text) {
  std::istringstream in(text);
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (!(in >> m(r, c))) fail(ErrorCode::InvalidTransform, "matrix file needs 16 numbers");
  std::string extra;
  if (in >> extra) fail(ErrorCode::InvalidTransform, "matrix file has more than 16 numbers");
  return SimilarityTransformd::from_matrix(m);
}

SimilarityTransformd load_transform(const std::string& path) {
  const Bytes bytes = read_file(path);
  const std::string text(bytes.begin(), bytes.end());
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return transform_from_json(text);
  return transform_from_matrix_text(text);
}

void save_transform(const std::string& path, const SimilarityTransformd& transform) {
  const bool json_out = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  const std::string text = json_out ? transform_to_json(transform) + "\n" : transform_to_matrix_text(transform);
  write_file(path, as_bytes(text));
}

}  // namespace meshsplat
