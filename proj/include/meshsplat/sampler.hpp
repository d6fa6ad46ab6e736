#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "meshsplat/detail/parallel.hpp"
#include "meshsplat/error.hpp"
#include "meshsplat/mesh_io.hpp"
#include "meshsplat/types.hpp"

namespace meshsplat {

inline constexpr int kMaxTableDepth = 12;
inline constexpr int kMaxNumGrades = kMaxTableDepth + 1;
inline constexpr std::uint64_t kDefaultPointBudget = 1'000'000;

/// Barycentric weights of the sub-triangle centroids produced by repeated
/// midpoint subdivision. Level n holds 4^n rows (w_a, w_b, w_c), ordered
/// depth-first over the children (a,m_ab,m_ac), (m_ab,b,m_bc),
/// (m_ac,m_bc,c), (m_ab,m_bc,m_ac).
template <typename Scalar>
class BarycentricTable {
 public:
  using Weights = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

  explicit BarycentricTable(int max_depth) {
    if (max_depth < 0 || max_depth > kMaxTableDepth)
      fail(ErrorCode::DepthTooLarge,
           "table depth " + std::to_string(max_depth) + " outside [0, " +
               std::to_string(kMaxTableDepth) + "]");
    levels_.reserve(static_cast<std::size_t>(max_depth) + 1);
    for (int n = 0; n <= max_depth; ++n) levels_.push_back(build_level(n));
  }

  int max_depth() const { return static_cast<int>(levels_.size()) - 1; }
  const Weights& level(int n) const { return levels_.at(static_cast<std::size_t>(n)); }

 private:
  // Vertices of depth-n sub-triangles are exact multiples of 2^-n, so the
  // recursion runs on integer lattice coordinates and each centroid is a
  // single correctly rounded division.
  using Lattice = std::array<std::int64_t, 3>;

  static Weights build_level(int depth) {
    const std::int64_t unit = std::int64_t{1} << depth;
    Weights w(Eigen::Index{1} << (2 * depth), 3);
    Eigen::Index row = 0;
    const Scalar denom = Scalar(3) * Scalar(unit);
    auto emit = [&](const Lattice& a, const Lattice& b, const Lattice& c) {
      for (int k = 0; k < 3; ++k) w(row, k) = Scalar(a[k] + b[k] + c[k]) / denom;
      ++row;
    };
    subdivide({unit, 0, 0}, {0, unit, 0}, {0, 0, unit}, depth, emit);
    return w;
  }

  static Lattice midpoint(const Lattice& x, const Lattice& y) {
    return {(x[0] + y[0]) / 2, (x[1] + y[1]) / 2, (x[2] + y[2]) / 2};
  }

  template <typename Emit>
  static void subdivide(const Lattice& a, const Lattice& b, const Lattice& c, int depth,
                        Emit& emit) {
    if (depth == 0) {
      emit(a, b, c);
      return;
    }
    const Lattice ab = midpoint(a, b);
    const Lattice bc = midpoint(b, c);
    const Lattice ac = midpoint(a, c);
    subdivide(a, ab, ac, depth - 1, emit);
    subdivide(ab, b, bc, depth - 1, emit);
    subdivide(ac, bc, c, depth - 1, emit);
    subdivide(ab, bc, ac, depth - 1, emit);
  }

  std::vector<Weights> levels_;
};

template <typename Scalar>
BarycentricTable<Scalar> barycentric_table(int max_depth) {
  return BarycentricTable<Scalar>(max_depth);
}

/// Area-ratio grade per triangle. Grade N covers ratios (1/4, 1], grade
/// g in [1, N-1] covers (4^(g-N-1), 4^(g-N)], and everything at or below
/// 4^-N collapses into grade 0.
struct GradeAssignment {
  std::vector<int> grades;
  int num_grades = 0;

  int max_grade() const { return num_grades - 1; }
  std::uint64_t total_points() const;
  std::vector<std::uint64_t> histogram() const;
};

inline std::uint64_t points_for_grade(int grade) { return std::uint64_t{1} << (2 * grade); }

GradeAssignment grade_triangles(std::span<const double> areas, int num_grades);

/// Total point count for the given areas and grade count, without
/// materializing the assignment.
std::uint64_t count_points(std::span<const double> areas, int num_grades);

struct AutoGrades {
  int num_grades = 0;
  std::uint64_t total_points = 0;
  bool within_budget = true;
};

/// Tries 9, 8, 7, 6 grades and keeps the first whose total fits the budget;
/// falls back to 6 (within_budget = false) when none does.
AutoGrades select_num_grades(std::span<const double> areas,
                             std::uint64_t budget = kDefaultPointBudget);

template <typename Scalar>
struct SampledCloud {
  Points3<Scalar> positions;
  Points3<Scalar> normals;
  std::vector<std::uint32_t> source_face;
  /// Grade per mesh face; -1 for skipped degenerate faces.
  std::vector<int> face_grades;
  std::vector<std::uint32_t> skipped_faces;
  int num_grades = 0;

  Eigen::Index size() const { return positions.rows(); }
};

/// Unit face normal of (a, b, c), or zero for a degenerate triangle.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> face_normal(const Eigen::Matrix<Scalar, 3, 1>& a,
                                        const Eigen::Matrix<Scalar, 3, 1>& b,
                                        const Eigen::Matrix<Scalar, 3, 1>& c) {
  const Eigen::Matrix<Scalar, 3, 1> n = (b - a).cross(c - a);
  const Scalar len = n.norm();
  return len > Scalar(0) ? Eigen::Matrix<Scalar, 3, 1>(n / len)
                         : Eigen::Matrix<Scalar, 3, 1>::Zero();
}

/// Points of one triangle at one depth: rows of weights * [a; b; c].
template <typename Scalar, typename Derived>
void sample_triangle(const typename BarycentricTable<Scalar>::Weights& weights,
                     const Eigen::Matrix<Scalar, 3, 3>& vertex_rows,
                     Eigen::MatrixBase<Derived> const& out_) {
  auto& out = const_cast<Eigen::MatrixBase<Derived>&>(out_);
  out.noalias() = weights * vertex_rows;
}

/// Grades non-degenerate faces and emits 4^grade points per face, ordered
/// by face index then table row. Degenerate faces (area < 1e-12) are
/// skipped and reported.
template <typename Scalar>
SampledCloud<Scalar> sample_mesh(const TriangleMesh& mesh, int num_grades,
                                 const BarycentricTable<Scalar>& table) {
  if (num_grades < 1 || num_grades > kMaxNumGrades)
    fail(ErrorCode::InvalidArgument, "num_grades must be in [1, 13]");
  if (table.max_depth() < num_grades - 1)
    fail(ErrorCode::TableTooShallow, "table depth " + std::to_string(table.max_depth()) +
                                         " < " + std::to_string(num_grades - 1));

  const Eigen::VectorXd areas = face_areas(mesh);
  std::vector<std::uint32_t> kept;
  std::vector<double> kept_areas;
  SampledCloud<Scalar> result;
  result.num_grades = num_grades;
  result.face_grades.assign(static_cast<std::size_t>(mesh.num_faces()), -1);
  for (Eigen::Index f = 0; f < areas.size(); ++f) {
    if (areas[f] >= kDegenerateArea) {
      kept.push_back(static_cast<std::uint32_t>(f));
      kept_areas.push_back(areas[f]);
    } else {
      result.skipped_faces.push_back(static_cast<std::uint32_t>(f));
    }
  }
  if (kept.empty()) fail(ErrorCode::AllDegenerate, "every face is degenerate");

  const GradeAssignment grading = grade_triangles(kept_areas, num_grades);
  std::vector<std::uint64_t> offsets(kept.size() + 1, 0);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    result.face_grades[kept[i]] = grading.grades[i];
    offsets[i + 1] = offsets[i] + points_for_grade(grading.grades[i]);
  }

  const auto total = static_cast<Eigen::Index>(offsets.back());
  result.positions.resize(total, 3);
  result.normals.resize(total, 3);
  result.source_face.resize(static_cast<std::size_t>(total));

  detail::parallel_for(
      0, kept.size(),
      [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
          const std::uint32_t f = kept[i];
          Eigen::Matrix<Scalar, 3, 3> v;
          for (int k = 0; k < 3; ++k)
            v.row(k) = mesh.vertices.row(mesh.faces(f, k)).template cast<Scalar>();
          const auto begin = static_cast<Eigen::Index>(offsets[i]);
          const auto count = static_cast<Eigen::Index>(offsets[i + 1] - offsets[i]);
          sample_triangle<Scalar>(table.level(grading.grades[i]), v,
                                  result.positions.middleRows(begin, count));
          const Eigen::Matrix<Scalar, 3, 1> n =
              face_normal<Scalar>(v.row(0).transpose(), v.row(1).transpose(), v.row(2).transpose());
          result.normals.middleRows(begin, count).rowwise() = n.transpose();
          std::fill_n(result.source_face.begin() + begin, count, f);
        }
      },
      8);
  return result;
}

}  // namespace meshsplat
