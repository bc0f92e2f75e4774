#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "spda/image.hpp"

namespace spda {

/// Disjoint index sets into a PatchMatrix that together cover every patch.
struct GroupPartition {
  std::vector<std::vector<std::size_t>> groups;

  std::size_t group_count() const noexcept { return groups.size(); }
  std::size_t patch_count() const;
};

struct GroupingOptions {
  std::size_t patch_side = 20;
  std::size_t target_size = 50;  // l
  Kernel kernel = Kernel::gaussian(7, 1.5);
  double tolerance = 0.0;  // epsilon; the distance gap is compared against epsilon^2
};

/// Sequential pivot grouping on the filtered image.
///
/// The first pivot is the filtered patch of least energy. Each group takes the
/// remaining patches nearest its pivot: it keeps admitting while it holds at most
/// `target_size` members, and afterwards only while a candidate's distance stays
/// within epsilon^2 of the previous admission's. The first rejected candidate
/// pivots the next group. A final group smaller than `target_size` is merged
/// into its predecessor. Ties go to the lowest patch index.
GroupPartition group_patches(const Image& img, const GroupingOptions& options);

/// Same procedure on pre-computed (already filtered) patch columns.
GroupPartition group_patch_columns(const Eigen::MatrixXd& filtered_patches,
                                   std::size_t target_size, double tolerance);

/// True when `partition` is disjoint, covers [0, patch_count) and every group has at least `min_size` members.
bool is_valid_partition(const GroupPartition& partition, std::size_t patch_count,
                        std::size_t min_size);

}  // namespace spda
