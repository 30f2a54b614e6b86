#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "lstcoseg/core.hpp"
#include "lstcoseg/patches.hpp"

namespace lstcoseg {

/// Matched patches of one patch, at most one per other image, ordered by image.
struct NeighborList {
    int patch_id = 0;
    std::vector<int> neighbors;
    std::vector<double> distances;  // squared L2 between HOG vectors
};

/// Nearest candidate by squared L2 distance; ties go to the smallest patch id.
/// Partial sums are abandoned early only once they strictly exceed the best
/// distance, so the result equals the exhaustive argmin.
int match_into_image(const PatchDescriptor& query, std::span<const PatchDescriptor> candidates,
                     double* distance = nullptr);

/// For every patch, its match in each other image. Requires patches[k].id ==
/// descriptors[k].patch_id == k. With a single image every list is empty.
std::vector<NeighborList> build_neighborhood(std::span<const Patch> patches, std::span<const PatchDescriptor> descriptors,
                                             int threads = 0);

/// One line per patch: "<id>: <neighbor>:<distance> ...".
void write_neighborhood(std::ostream& out, std::span<const NeighborList> lists);

}  // namespace lstcoseg
