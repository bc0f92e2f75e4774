#include "spda/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "spda/errors.hpp"

namespace spda {

std::size_t GroupPartition::patch_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

GroupPartition group_patch_columns(const Eigen::MatrixXd& filtered, std::size_t target_size,
                                   double tolerance) {
  const auto n = static_cast<std::size_t>(filtered.cols());
  if (target_size == 0) throw InvalidArgument("group target size must be at least 1");
  if (n == 0) throw InvalidArgument("no patches to group");
  if (n < target_size) {
    throw InvalidArgument("only " + std::to_string(n) + " patches for a target group size of " +
                          std::to_string(target_size));
  }
  const double eps2 = tolerance * tolerance;

  // Pool of remaining patches, kept in ascending index order.
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<char> taken(n, 0);

  std::size_t pivot = 0;
  {
    const Eigen::VectorXd energy = filtered.colwise().squaredNorm().transpose();
    double best = energy[0];
    for (std::size_t i = 1; i < n; ++i) {
      if (energy[static_cast<Eigen::Index>(i)] < best) {
        best = energy[static_cast<Eigen::Index>(i)];
        pivot = i;
      }
    }
  }
  std::size_t prev = pivot;

  GroupPartition out;
  std::vector<std::pair<double, std::size_t>> ranked;
  std::size_t remaining = n;
  while (remaining > 0) {
    // Distances to the pivot are fixed for the whole group, so successive
    // argmin selections over the pool are the pool sorted by (distance, index).
    ranked.clear();
    const auto pcol = filtered.col(static_cast<Eigen::Index>(pivot));
    for (std::size_t i : pool) {
      ranked.emplace_back((filtered.col(static_cast<Eigen::Index>(i)) - pcol).squaredNorm(), i);
    }
    std::sort(ranked.begin(), ranked.end());
    auto dist_to_pivot = [&](std::size_t i) {
      return (filtered.col(static_cast<Eigen::Index>(i)) - pcol).squaredNorm();
    };

    std::vector<std::size_t> group;
    std::size_t admitted = 0;  // l_g
    std::size_t cursor = 0;
    while (cursor < ranked.size()) {
      const auto [dist, candidate] = ranked[cursor];
      const bool below_target = admitted <= target_size;
      const bool tied = std::fabs(dist - dist_to_pivot(prev)) <= eps2;
      if (!(below_target || tied)) break;
      group.push_back(candidate);
      taken[candidate] = 1;
      ++admitted;
      prev = candidate;
      ++cursor;
    }
    remaining -= group.size();
    std::sort(group.begin(), group.end());
    out.groups.push_back(std::move(group));
    if (remaining == 0) break;
    pivot = ranked[cursor].second;
    std::erase_if(pool, [&](std::size_t i) { return taken[i] != 0; });
  }

  if (out.groups.size() > 1 && out.groups.back().size() < target_size) {
    auto last = std::move(out.groups.back());
    out.groups.pop_back();
    auto& dst = out.groups.back();
    dst.insert(dst.end(), last.begin(), last.end());
    std::sort(dst.begin(), dst.end());
  }
  return out;
}

GroupPartition group_patches(const Image& img, const GroupingOptions& options) {
  if (img.empty()) throw DimensionError("cannot group patches of an empty image");
  const Image filtered = convolve_same(img, options.kernel);
  const PatchMatrix patches = extract_patches(filtered, options.patch_side);
  return group_patch_columns(patches.data, options.target_size, options.tolerance);
}

bool is_valid_partition(const GroupPartition& partition, std::size_t patch_count,
                        std::size_t min_size) {
  std::vector<char> seen(patch_count, 0);
  std::size_t total = 0;
  for (const auto& g : partition.groups) {
    if (g.size() < min_size) return false;
    for (std::size_t i : g) {
      if (i >= patch_count || seen[i]) return false;
      seen[i] = 1;
      ++total;
    }
  }
  return total == patch_count;
}

}  // namespace spda
