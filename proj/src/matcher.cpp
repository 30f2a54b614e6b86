#include "lstcoseg/matcher.hpp"

#include <limits>
#include <ostream>

#include "lstcoseg/parallel.hpp"

namespace lstcoseg {

int match_into_image(const PatchDescriptor& query, std::span<const PatchDescriptor> candidates, double* distance)
{
    if (candidates.empty()) throw InvalidInput("no candidate patches to match against");
    const std::size_t dim = query.hog.size();
    int best_id = -1;
    double best = std::numeric_limits<double>::infinity();
    for (const PatchDescriptor& c : candidates) {
        if (c.hog.size() != dim) throw InvalidInput("descriptor dimensions differ");
        double d = 0.0;
        std::size_t k = 0;
        for (; k < dim; ++k) {
            const double diff = query.hog[k] - c.hog[k];
            d += diff * diff;
            if (d > best) break;
        }
        if (k < dim) continue;
        if (d < best || (d == best && c.patch_id < best_id)) {
            best = d;
            best_id = c.patch_id;
        }
    }
    if (distance) *distance = best;
    return best_id;
}

std::vector<NeighborList> build_neighborhood(std::span<const Patch> patches, std::span<const PatchDescriptor> descriptors,
                                             int threads)
{
    if (patches.size() != descriptors.size()) throw InvalidInput("patch and descriptor counts differ");
    std::size_t image_count = 0;
    for (std::size_t k = 0; k < patches.size(); ++k) {
        if (patches[k].id != static_cast<int>(k) || descriptors[k].patch_id != static_cast<int>(k))
            throw InvalidInput("patch ids must be dense and aligned with descriptors");
        image_count = std::max(image_count, patches[k].image + 1);
    }

    std::vector<std::vector<PatchDescriptor>> by_image(image_count);
    for (std::size_t k = 0; k < patches.size(); ++k) by_image[patches[k].image].push_back(descriptors[k]);

    std::vector<NeighborList> lists(patches.size());
    parallel_for(patches.size(), threads, [&](std::size_t k) {
        NeighborList& list = lists[k];
        list.patch_id = static_cast<int>(k);
        for (std::size_t b = 0; b < image_count; ++b) {
            if (b == patches[k].image || by_image[b].empty()) continue;
            double d = 0.0;
            list.neighbors.push_back(match_into_image(descriptors[k], by_image[b], &d));
            list.distances.push_back(d);
        }
    });
    return lists;
}

void write_neighborhood(std::ostream& out, std::span<const NeighborList> lists)
{
    for (const NeighborList& l : lists) {
        out << l.patch_id << ':';
        for (std::size_t k = 0; k < l.neighbors.size(); ++k) out << ' ' << l.neighbors[k] << ':' << l.distances[k];
        out << '\n';
    }
}

}  // namespace lstcoseg
