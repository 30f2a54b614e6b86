#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lstcoseg/core.hpp"
#include "lstcoseg/lle.hpp"
#include "lstcoseg/patches.hpp"

namespace lstcoseg {

/// One label vector per patch, stored as a dense patch-major matrix. In the
/// pipeline every vector is the 48x48 label grid of its patch; tests may use
/// other lengths.
class PatchLabels {
public:
    PatchLabels() = default;
    PatchLabels(std::size_t patch_count, std::size_t length, double fill = 0.0)
        : count_(patch_count), length_(length), values_(patch_count * length, fill)
    {
    }

    [[nodiscard]] std::size_t patch_count() const noexcept { return count_; }
    [[nodiscard]] std::size_t length() const noexcept { return length_; }
    std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * length_, length_}; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept { return {values_.data() + i * length_, length_}; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    friend bool operator==(const PatchLabels&, const PatchLabels&) = default;

private:
    std::size_t count_ = 0;
    std::size_t length_ = 0;
    std::vector<double> values_;
};

/// Bilinear resampling of a label field over the patch window onto the
/// 48x48 grid. Scale-48 windows are copied exactly.
std::vector<double> extract_patch_labels(const SoftMask& field, const Patch& patch);
std::vector<double> extract_patch_labels(const BinaryMask& mask, const Patch& patch);

SoftMask to_soft(const BinaryMask& mask);

/// Stacks the label vectors of all patches; fields are indexed by image.
PatchLabels extract_labels(std::span<const SoftMask> fields, std::span<const Patch> patches);

struct Backprojection {
    SoftMask zbar;      // coverage-weighted mean of the upsampled patch labels; 0.5 where uncovered
    CoverageMap cover;
};

/// Upsamples each patch vector of image `image_index` back to its window and
/// averages overlapping contributions.
Backprojection backproject(const PatchLabels& z, std::span<const Patch> patches, std::size_t image_index, int width,
                           int height);

/// alpha * sum_i ||z_i - sum_j w_ij z_j||^2 + lambda * sum_i ||z_i - y_i||^2.
/// Patches without outgoing neighbors contribute no reconstruction term.
double diffusion_objective(const PatchLabels& z, const PatchLabels& y, const WeightedPatchGraph& graph, double alpha,
                           double lambda);

/// One pass of closed-form per-patch updates in patch-id order, each
/// minimizing the objective over z_i with the others fixed:
///
///   z_i = [alpha (sum_{j in N_i} w_ij z_j + sum_{j: i in N_j} w_ji r_{j\i}) + lambda y_i]
///         / (alpha [N_i nonempty] + lambda + alpha sum_{j: i in N_j} w_ji^2)
///
/// with r_{j\i} = z_j - sum_{k in N_j, k != i} w_jk z_k. Coordinates are
/// independent and processed in parallel. `objective`, if given, receives
/// the objective of the returned labels.
PatchLabels diffusion_sweep(PatchLabels z, const PatchLabels& y, const WeightedPatchGraph& graph, double alpha,
                            double lambda, int threads = 0, double* objective = nullptr);

struct DiffusionResult {
    PatchLabels z;
    int sweeps = 0;
    double last_change = 0.0;
    std::vector<double> objective_trace;  // objective after each sweep, before normalization
};

using LabelNormalizer = std::function<void(PatchLabels&)>;

/// Sweeps from z = y until the largest coordinate change drops below `tol`
/// or `max_sweeps` is reached. `normalize`, when set, runs after every sweep.
DiffusionResult iterate_diffusion(const PatchLabels& y, const WeightedPatchGraph& graph, double alpha, double lambda,
                                  double tol, int max_sweeps, const LabelNormalizer& normalize = {}, int threads = 0);

/// Min-max normalization of each image's back-projected field (constant
/// fields become 0.5), re-extracted into the patch vectors.
void normalize_per_image(PatchLabels& z, std::span<const Patch> patches, std::span<const Image> images);

/// Pipeline entry: iterate_diffusion with per-image normalization, or y
/// unchanged when transfer is disabled.
DiffusionResult run_diffusion(const PatchLabels& y, const WeightedPatchGraph& graph, const CosegConfig& config,
                              std::span<const Patch> patches, std::span<const Image> images);

}  // namespace lstcoseg
