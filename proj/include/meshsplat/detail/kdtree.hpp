#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "meshsplat/types.hpp"

namespace meshsplat::detail {

/// Static 3D kd-tree over a point matrix that must outlive the tree.
template <typename Scalar>
class KdTree {
 public:
  explicit KdTree(const Points3<Scalar>& points) : points_(points) {
    index_.resize(static_cast<std::size_t>(points.rows()));
    std::iota(index_.begin(), index_.end(), Eigen::Index{0});
    if (!index_.empty()) build(0, index_.size(), 0);
  }

  /// Squared distances to the k nearest points other than `self`, ascending.
  std::vector<double> nearest_excluding(Eigen::Index self, std::size_t k) const {
    std::vector<double> best;
    if (k == 0 || index_.empty()) return best;
    const Eigen::Matrix<double, 1, 3> q = points_.row(self).template cast<double>();
    search(0, index_.size(), 0, q, self, k, best);
    return best;
  }

 private:
  static constexpr std::size_t kLeaf = 8;

  void build(std::size_t lo, std::size_t hi, int axis) {
    if (hi - lo <= kLeaf) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(index_.begin() + lo, index_.begin() + mid, index_.begin() + hi,
                     [&](Eigen::Index a, Eigen::Index b) {
                       return points_(a, axis) < points_(b, axis) ||
                              (points_(a, axis) == points_(b, axis) && a < b);
                     });
    build(lo, mid, (axis + 1) % 3);
    build(mid + 1, hi, (axis + 1) % 3);
  }

  void offer(double d2, std::size_t k, std::vector<double>& best) const {
    if (best.size() == k && d2 >= best.back()) return;
    best.insert(std::upper_bound(best.begin(), best.end(), d2), d2);
    if (best.size() > k) best.pop_back();
  }

  void search(std::size_t lo, std::size_t hi, int axis, const Eigen::Matrix<double, 1, 3>& q,
              Eigen::Index self, std::size_t k, std::vector<double>& best) const {
    if (hi - lo <= kLeaf) {
      for (std::size_t i = lo; i < hi; ++i) {
        const Eigen::Index p = index_[i];
        if (p == self) continue;
        offer((points_.row(p).template cast<double>() - q).squaredNorm(), k, best);
      }
      return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    const Eigen::Index p = index_[mid];
    if (p != self) offer((points_.row(p).template cast<double>() - q).squaredNorm(), k, best);
    const double delta = q(axis) - static_cast<double>(points_(p, axis));
    const int next = (axis + 1) % 3;
    const bool left_first = delta < 0;
    search(left_first ? lo : mid + 1, left_first ? mid : hi, next, q, self, k, best);
    if (best.size() < k || delta * delta < best.back())
      search(left_first ? mid + 1 : lo, left_first ? hi : mid, next, q, self, k, best);
  }

  const Points3<Scalar>& points_;
  std::vector<Eigen::Index> index_;
};

}  // namespace meshsplat::detail
