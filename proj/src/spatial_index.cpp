#include "embryosim/spatial_index.hpp"

#include <algorithm>
#include <stdexcept>

namespace embryosim {
namespace {

constexpr std::uint32_t kLeafSize = 16;

struct Candidate {
  double d2;
  std::int64_t id;
  std::uint32_t slot;
};

bool closer(const Candidate& a, const Candidate& b) {
  return a.d2 < b.d2 || (a.d2 == b.d2 && a.id < b.id);
}

}  // namespace

SpatialIndex::SpatialIndex(std::span<const IndexedPoint> points)
    : points_(points.begin(), points.end()) {
  if (points_.empty()) throw std::invalid_argument("SpatialIndex: empty point set");
  for (const auto& p : points_) {
    if (!is_finite(p.position)) throw std::invalid_argument("SpatialIndex: non-finite position");
  }
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(points_.size()), 0);
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end, int depth) {
  const auto node_id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, begin, end, -1, -1});
  if (end - begin <= kLeafSize) return node_id;

  Vec3 lo = points_[begin].position;
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], points_[i].position[a]);
      hi[a] = std::max(hi[a], points_[i].position[a]);
    }
  }
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
  }
  if (hi[axis] == lo[axis]) return node_id;  // all coincident: keep as a leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                   [axis](const IndexedPoint& a, const IndexedPoint& b) {
                     return a.position[axis] < b.position[axis];
                   });
  const double split = points_[mid].position[axis];
  const std::int32_t left = build(begin, mid, depth + 1);
  const std::int32_t right = build(mid, end, depth + 1);
  Node& node = nodes_[node_id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return node_id;
}

std::vector<Neighbor> SpatialIndex::knn(const Vec3& x, int k,
                                        std::optional<std::int64_t> exclude_id) const {
  if (k < 1) throw std::invalid_argument("knn: K must be >= 1");
  const auto limit = static_cast<std::size_t>(k);
  std::vector<Candidate> best;  // sorted by closer()
  best.reserve(limit + 1);

  auto consider = [&](std::uint32_t slot) {
    const IndexedPoint& p = points_[slot];
    if (exclude_id && p.id == *exclude_id) return;
    const Candidate c{distance_squared(x, p.position), p.id, slot};
    if (best.size() == limit && !closer(c, best.back())) return;
    best.insert(std::upper_bound(best.begin(), best.end(), c, closer), c);
    if (best.size() > limit) best.pop_back();
  };

  // Iterative depth-first descent, near child first.
  struct Pending {
    std::int32_t node;
    double plane_d2;
  };
  std::vector<Pending> stack{{0, 0.0}};
  while (!stack.empty()) {
    const Pending cur = stack.back();
    stack.pop_back();
    if (best.size() == limit && cur.plane_d2 > best.back().d2) continue;
    const Node& node = nodes_[cur.node];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) consider(i);
      continue;
    }
    const double diff = x[node.axis] - node.split;
    const std::int32_t near_child = diff < 0.0 ? node.left : node.right;
    const std::int32_t far_child = diff < 0.0 ? node.right : node.left;
    stack.push_back({far_child, std::max(cur.plane_d2, diff * diff)});
    stack.push_back({near_child, cur.plane_d2});
  }

  std::vector<Neighbor> out;
  out.reserve(best.size());
  for (const auto& c : best) {
    out.push_back({c.id, points_[c.slot].position, std::sqrt(c.d2)});
  }
  return out;
}

template <typename Visit>
void SpatialIndex::visit_ball(const Vec3& x, double r2, Visit&& visit) const {
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const double d2 = distance_squared(x, points_[i].position);
        if (d2 <= r2) visit(points_[i], d2);
      }
      continue;
    }
    const double diff = x[node.axis] - node.split;
    const double plane_d2 = diff * diff;
    if (diff < 0.0) {
      stack.push_back(node.left);
      if (plane_d2 <= r2) stack.push_back(node.right);
    } else {
      stack.push_back(node.right);
      if (plane_d2 <= r2) stack.push_back(node.left);
    }
  }
}

std::vector<Neighbor> SpatialIndex::range(const Vec3& x, double r,
                                          std::optional<std::int64_t> exclude_id) const {
  if (!(r > 0.0)) throw std::invalid_argument("range: radius must be positive");
  std::vector<Neighbor> out;
  visit_ball(x, r * r, [&](const IndexedPoint& p, double d2) {
    if (exclude_id && p.id == *exclude_id) return;
    out.push_back({p.id, p.position, std::sqrt(d2)});
  });
  std::sort(out.begin(), out.end(),
            [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
  return out;
}

std::size_t SpatialIndex::range_count(const Vec3& x, double r,
                                      std::optional<std::int64_t> exclude_id) const {
  if (!(r > 0.0)) throw std::invalid_argument("range_count: radius must be positive");
  std::size_t count = 0;
  visit_ball(x, r * r, [&](const IndexedPoint& p, double) {
    if (!(exclude_id && p.id == *exclude_id)) ++count;
  });
  return count;
}

SpatialIndex build_index(std::span<const IndexedPoint> points) { return SpatialIndex(points); }

std::vector<Neighbor> knn_query(const SpatialIndex& index, const Vec3& x, int k) {
  return index.knn(x, k);
}

std::size_t range_count(const SpatialIndex& index, const Vec3& x, double r,
                        std::optional<std::int64_t> exclude_id) {
  return index.range_count(x, r, exclude_id);
}

}  // namespace embryosim
