#include "meshsplat/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace meshsplat {
namespace {

double checked_max_area(std::span<const double> areas, int num_grades) {
  if (num_grades < 1 || num_grades > kMaxNumGrades)
    fail(ErrorCode::InvalidArgument, "num_grades must be in [1, 13], got " + std::to_string(num_grades));
  double max_area = 0.0;
  for (double a : areas) {
    if (!(a > 0.0) || !std::isfinite(a))
      fail(ErrorCode::InvalidArgument, "triangle areas must be positive and finite");
    max_area = std::max(max_area, a);
  }
  if (areas.empty() || max_area < kDegenerateArea)
    fail(ErrorCode::AllDegenerate, "largest triangle area is below the degeneracy threshold");
  return max_area;
}

// The band test compares area * 4^(j+1) against the maximum instead of
// dividing, so ratios that are exact powers of 1/4 land on the documented
// (inclusive) upper bound.
int grade_of(double area, double max_area, int max_grade) {
  for (int j = 0; j < max_grade; ++j)
    if (std::ldexp(area, 2 * (j + 1)) > max_area) return max_grade - j;
  return 0;
}

}  // namespace

std::uint64_t GradeAssignment::total_points() const {
  std::uint64_t total = 0;
  for (int g : grades) total += points_for_grade(g);
  return total;
}

std::vector<std::uint64_t> GradeAssignment::histogram() const {
  std::vector<std::uint64_t> hist(static_cast<std::size_t>(num_grades), 0);
  for (int g : grades) ++hist[static_cast<std::size_t>(g)];
  return hist;
}

GradeAssignment grade_triangles(std::span<const double> areas, int num_grades) {
  const double max_area = checked_max_area(areas, num_grades);
  GradeAssignment out;
  out.num_grades = num_grades;
  out.grades.reserve(areas.size());
  for (double a : areas) out.grades.push_back(grade_of(a, max_area, num_grades - 1));
  return out;
}

std::uint64_t count_points(std::span<const double> areas, int num_grades) {
  const double max_area = checked_max_area(areas, num_grades);
  std::uint64_t total = 0;
  for (double a : areas) total += points_for_grade(grade_of(a, max_area, num_grades - 1));
  return total;
}

AutoGrades select_num_grades(std::span<const double> areas, std::uint64_t budget) {
  AutoGrades choice;
  for (int g : {9, 8, 7, 6}) {
    choice.num_grades = g;
    choice.total_points = count_points(areas, g);
    if (choice.total_points <= budget) return choice;
  }
  choice.within_budget = false;
  return choice;
}

}  // namespace meshsplat
