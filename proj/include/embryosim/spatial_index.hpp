#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "embryosim/vec3.hpp"

namespace embryosim {

struct IndexedPoint {
  std::int64_t id = 0;
  Vec3 position;
};

struct Neighbor {
  std::int64_t id = 0;
  Vec3 position;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Static kd-tree over (id, position) entries. Immutable after construction, so
// concurrent queries are safe.
//
// Distances are compared as squared Euclidean distances computed by
// distance_squared(); results are identical to a brute-force scan using the
// same function. Equal distances are ordered by ascending id.
class SpatialIndex {
 public:
  explicit SpatialIndex(std::span<const IndexedPoint> points);

  std::size_t size() const { return points_.size(); }

  // Up to K nearest entries, ascending by (distance, id).
  std::vector<Neighbor> knn(const Vec3& x, int k,
                            std::optional<std::int64_t> exclude_id = std::nullopt) const;

  // Entries with distance <= r, ascending by id.
  std::vector<Neighbor> range(const Vec3& x, double r,
                              std::optional<std::int64_t> exclude_id = std::nullopt) const;

  std::size_t range_count(const Vec3& x, double r,
                          std::optional<std::int64_t> exclude_id = std::nullopt) const;

 private:
  struct Node {
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, int depth);

  template <typename Visit>
  void visit_ball(const Vec3& x, double r2, Visit&& visit) const;

  std::vector<IndexedPoint> points_;
  std::vector<Node> nodes_;
};

// Free-function spellings used by the simulation code.
SpatialIndex build_index(std::span<const IndexedPoint> points);
std::vector<Neighbor> knn_query(const SpatialIndex& index, const Vec3& x, int k);
std::size_t range_count(const SpatialIndex& index, const Vec3& x, double r,
                        std::optional<std::int64_t> exclude_id = std::nullopt);

}  // namespace embryosim
