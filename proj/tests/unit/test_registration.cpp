#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "meshsplat/error.hpp"
#include "meshsplat/mesh_io.hpp"
#include "meshsplat/registration.hpp"
#include "test_support.hpp"

namespace meshsplat {
namespace {

using testing::Rng;

Eigen::Matrix3Xd random_points(Rng& rng, Eigen::Index n) {
  Eigen::Matrix3Xd p(3, n);
  for (Eigen::Index i = 0; i < n; ++i)
    p.col(i) = Eigen::Vector3d(testing::uniform(rng, -5, 5), testing::uniform(rng, -5, 5), testing::uniform(rng, -5, 5));
  return p;
}

Eigen::Matrix3Xd apply(const SimilarityTransformd& t, const Eigen::Matrix3Xd& p) {
  Eigen::Matrix3Xd out(3, p.cols());
  for (Eigen::Index i = 0; i < p.cols(); ++i) out.col(i) = t(p.col(i));
  return out;
}

double rotation_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  return std::min((a.coeffs() - b.coeffs()).norm(), (a.coeffs() + b.coeffs()).norm());
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidArgument;
}

TEST(ApplySimilarity, IdentityIsBitExact) {
  Rng rng(1);
  const PointCloud cloud = testing::random_cloud(rng, 500);
  EXPECT_EQ(apply_similarity(cloud, SimilarityTransformd::identity()), cloud);
}

TEST(ApplySimilarity, ScaleLeavesNormals) {
  PointCloud cloud;
  cloud.resize(1);
  cloud.positions << 1, 1, 1;
  cloud.normals << 0, 0.6f, 0.8f;
  cloud.colors << 1, 2, 3;
  SimilarityTransformd t;
  t.scale = 2;
  const PointCloud out = apply_similarity(cloud, t);
  EXPECT_EQ(out.positions.row(0), Eigen::RowVector3f(2, 2, 2));
  EXPECT_LT((out.normals.row(0) - cloud.normals.row(0)).norm(), 1e-7);
  EXPECT_EQ(out.colors, cloud.colors);
}

TEST(SimilarityTransform, QuarterTurnAboutZ) {
  SimilarityTransformd t;
  t.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()));
  EXPECT_LT((t(Eigen::Vector3d(1, 0, 0)) - Eigen::Vector3d(0, 1, 0)).norm(), 1e-12);
}

TEST(SimilarityTransform, CompositionMatchesSequentialApplication) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto t1 = testing::random_similarity(rng);
    const auto t2 = testing::random_similarity(rng);
    const auto both = compose(t2, t1);
    const Eigen::Vector3d x(testing::uniform(rng, -3, 3), testing::uniform(rng, -3, 3), testing::uniform(rng, -3, 3));
    const Eigen::Vector3d expected = t2(t1(x));
    EXPECT_LT((both(x) - expected).norm(), 1e-9 * std::max(1.0, expected.norm()));
    EXPECT_LT((both.matrix() - t2.matrix() * t1.matrix()).cwiseAbs().maxCoeff(), 1e-9 * both.matrix().norm());
  }
}

TEST(SimilarityTransform, InverseAndMatrixRoundTrip) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = testing::random_similarity(rng);
    const auto id = compose(t.inverse(), t);
    EXPECT_NEAR(id.scale, 1.0, 1e-12);
    EXPECT_LT(id.translation.norm(), 1e-9);
    const auto back = SimilarityTransformd::from_matrix(t.matrix());
    EXPECT_NEAR(back.scale, t.scale, 1e-12 * t.scale);
    EXPECT_LT(rotation_distance(back.rotation, t.rotation), 1e-12);
    EXPECT_LT((back.translation - t.translation).norm(), 1e-12);
  }
}

TEST(SimilarityTransform, InvalidTransformsAreRejected) {
  SimilarityTransformd t;
  t.scale = 0;
  EXPECT_EQ(code_of([&] { t.validate(); }), ErrorCode::InvalidTransform);
  t.scale = 1;
  t.rotation = Eigen::Quaterniond(1, 1, 0, 0);
  EXPECT_EQ(code_of([&] { t.validate(); }), ErrorCode::InvalidTransform);
  Eigen::Matrix4d mirror = Eigen::Matrix4d::Identity();
  mirror(0, 0) = -1;
  EXPECT_EQ(code_of([&] { SimilarityTransformd::from_matrix(mirror); }), ErrorCode::InvalidTransform);
  Eigen::Matrix4d shear = Eigen::Matrix4d::Identity();
  shear(0, 1) = 0.5;
  EXPECT_EQ(code_of([&] { SimilarityTransformd::from_matrix(shear); }), ErrorCode::InvalidTransform);
}

TEST(EstimateSimilarity, IdentityFromEqualSets) {
  Rng rng(4);
  const Eigen::Matrix3Xd p = random_points(rng, 10);
  const auto est = estimate_similarity<double>(p, p);
  EXPECT_NEAR(est.transform.scale, 1.0, 1e-12);
  EXPECT_LT(rotation_distance(est.transform.rotation, Eigen::Quaterniond::Identity()), 1e-12);
  EXPECT_LT(est.transform.translation.norm(), 1e-12);
  EXPECT_LT(est.residual_rms, 1e-12);
}

TEST(EstimateSimilarity, ScaleThreePlusOffset) {
  Rng rng(5);
  const Eigen::Matrix3Xd p = random_points(rng, 6);
  const Eigen::Matrix3Xd q = (3.0 * p).colwise() + Eigen::Vector3d(1, 2, 3);
  const auto est = estimate_similarity<double>(p, q);
  EXPECT_NEAR(est.transform.scale, 3.0, 1e-12);
  EXPECT_LT(rotation_distance(est.transform.rotation, Eigen::Quaterniond::Identity()), 1e-12);
  EXPECT_LT((est.transform.translation - Eigen::Vector3d(1, 2, 3)).norm(), 1e-12);
  EXPECT_LT(est.residual_rms, 1e-9);
}

TEST(EstimateSimilarity, RecoversRandomTransforms) {
  Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const auto truth = testing::random_similarity(rng);
    const Eigen::Matrix3Xd p = random_points(rng, 4 + static_cast<Eigen::Index>(rng() % 20));
    const auto est = estimate_similarity<double>(p, apply(truth, p));
    EXPECT_NEAR(est.transform.scale, truth.scale, 1e-6);
    EXPECT_LT(rotation_distance(est.transform.rotation, truth.rotation), 1e-6);
    EXPECT_LT((est.transform.translation - truth.translation).norm(), 1e-6);
    EXPECT_LT(est.residual_rms, 1e-9);
  }
}

TEST(EstimateSimilarity, AgreesWithEigenUmeyama) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Matrix3Xd p = random_points(rng, 30);
    Eigen::Matrix3Xd q = apply(testing::random_similarity(rng), p);
    for (Eigen::Index i = 0; i < q.cols(); ++i)
      q.col(i) += Eigen::Vector3d(testing::uniform(rng, -0.01, 0.01), testing::uniform(rng, -0.01, 0.01),
                                  testing::uniform(rng, -0.01, 0.01));
    const Eigen::Matrix4d reference = Eigen::umeyama(p, q, true);
    const auto est = estimate_similarity<double>(p, q);
    EXPECT_LT((est.transform.matrix() - reference).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(EstimateSimilarity, ExactPlanarCorrespondences) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Matrix3Xd p = random_points(rng, 3 + static_cast<Eigen::Index>(trial % 5));
    p.row(2).setZero();
    const auto truth = testing::random_similarity(rng);
    const auto est = estimate_similarity<double>(p, apply(truth, p));
    EXPECT_LT(est.residual_rms, 1e-9);
    EXPECT_LT(rotation_distance(est.transform.rotation, truth.rotation), 1e-6);
  }
}

TEST(EstimateSimilarity, DegenerateInputs) {
  Eigen::Matrix3Xd line(3, 3);
  line << 0, 1, 2, 0, 1, 2, 0, 1, 2;
  EXPECT_EQ(code_of([&] { estimate_similarity<double>(line, line); }), ErrorCode::DegenerateConfiguration);
  Eigen::Matrix3Xd two(3, 2);
  two << 0, 1, 0, 0, 0, 1;
  EXPECT_EQ(code_of([&] { estimate_similarity<double>(two, two); }), ErrorCode::TooFewCorrespondences);
}

TEST(EstimateSimilarity, ReflectionIsRejected) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Matrix3Xd p = random_points(rng, 8);
    Eigen::Matrix3Xd q = apply(testing::random_similarity(rng), p);
    q.row(0) *= -1.0;  // mirror in the target frame
    EXPECT_EQ(code_of([&] { estimate_similarity<double>(p, q); }), ErrorCode::ReflectionDetected);
  }
}

TEST(MergeClouds, OrderAndCounts) {
  Rng rng(10);
  const PointCloud sampled = testing::random_cloud(rng, 40);
  const PointCloud sfm = testing::random_cloud(rng, 25);
  const PointCloud merged = merge_clouds(sampled, sfm);
  ASSERT_EQ(merged.size(), 65);
  EXPECT_EQ(merged.positions.topRows(25), sfm.positions);
  EXPECT_EQ(merged.colors.topRows(25), sfm.colors);
  EXPECT_EQ(merged.positions.bottomRows(40), sampled.positions);
  EXPECT_EQ(merged.normals.bottomRows(40), sampled.normals);
  EXPECT_EQ(merge_clouds(PointCloud{}, sfm), sfm);
}

TEST(TransformIo, JsonRoundTripIsExact) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = testing::random_similarity(rng);
    const auto back = transform_from_json(transform_to_json(t));
    EXPECT_EQ(back.scale, t.scale);
    EXPECT_EQ(back.rotation.coeffs(), t.rotation.coeffs());
    EXPECT_EQ(back.translation, t.translation);
  }
}

TEST(TransformIo, MatrixTextRoundTrip) {
  Rng rng(12);
  const auto t = testing::random_similarity(rng);
  const auto back = transform_from_matrix_text(transform_to_matrix_text(t));
  EXPECT_NEAR(back.scale, t.scale, 1e-12 * t.scale);
  EXPECT_LT(rotation_distance(back.rotation, t.rotation), 1e-12);
  EXPECT_LT((back.translation - t.translation).norm(), 1e-12);
}

TEST(TransformIo, FilesPickTheirEncoding) {
  testing::TempDir dir;
  Rng rng(13);
  const auto t = testing::random_similarity(rng);
  save_transform(dir.file("t.json"), t);
  save_transform(dir.file("t.txt"), t);
  const Bytes json = read_file(dir.file("t.json"));
  EXPECT_EQ(json.front(), '{');
  EXPECT_EQ(load_transform(dir.file("t.json")).translation, t.translation);
  EXPECT_LT((load_transform(dir.file("t.txt")).translation - t.translation).norm(), 1e-12);
}

TEST(TransformIo, BadJsonIsInvalidTransform) {
  EXPECT_EQ(code_of([] { transform_from_json("{\"scale\": 1}"); }), ErrorCode::InvalidTransform);
  EXPECT_EQ(code_of([] { transform_from_json("not json"); }), ErrorCode::InvalidTransform);
  EXPECT_EQ(code_of([] { transform_from_json(R"({"scale":-1,"rotation":[1,0,0,0],"translation":[0,0,0]})"); }),
            ErrorCode::InvalidTransform);
}

}  // namespace
}  // namespace meshsplat
