#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lstcoseg/core.hpp"
#include "lstcoseg/diffusion.hpp"
#include "lstcoseg/lle.hpp"
#include "lstcoseg/matcher.hpp"
#include "lstcoseg/mrf.hpp"
#include "lstcoseg/patches.hpp"
#include "lstcoseg/saliency.hpp"

namespace lstcoseg {

/// A failure inside the pipeline, tagged with the stage and image (empty
/// when the stage is not image-specific).
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, std::string image, const std::string& what, bool invalid_input);

    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }
    [[nodiscard]] const std::string& image() const noexcept { return image_; }
    /// True when caused by bad input data rather than an internal fault.
    [[nodiscard]] bool invalid_input() const noexcept { return invalid_input_; }

private:
    std::string stage_;
    std::string image_;
    bool invalid_input_;
};

struct ColorModelPair {
    ColorModel fg;
    ColorModel bg;
};

/// Fits foreground/background models from the current masks, either one
/// pair pooled over all images or one pair per image. Always returns one
/// pair per image.
std::vector<ColorModelPair> fit_color_models(std::span<const Image> images, std::span<const BinaryMask> masks,
                                             const CosegConfig& config, int iteration, Diagnostics* diagnostics = nullptr);

/// Patches, descriptors, matches and reconstruction weights of an image set.
struct PatchGraph {
    std::vector<Patch> patches;
    std::vector<PatchDescriptor> descriptors;
    std::vector<NeighborList> neighbors;
    WeightedPatchGraph weights;
};

PatchGraph build_patch_graph(std::span<const Image> images, const CosegConfig& config, Diagnostics* diagnostics = nullptr);

struct EnergyTerms {
    double segmentation = 0.0;     // sum of per-image MRF energies
    double reconstruction = 0.0;   // alpha-weighted reconstruction residual of z
    double coupling = 0.0;         // lambda-weighted ||z - y||^2
    std::vector<double> per_image; // the three terms restricted to each image's patches

    [[nodiscard]] double total() const noexcept { return segmentation + reconstruction + coupling; }
};

/// Relaxed joint objective: MRF energies of the masks plus the
/// reconstruction and coupling terms of the soft patch labels z, with y
/// extracted from the masks. `patches` and `graph` may be empty (no transfer).
EnergyTerms energy(std::span<const Image> images, std::span<const BinaryMask> masks, const PatchLabels& z,
                   std::span<const ColorModelPair> models, std::span<const PairwiseField> pairwise,
                   std::span<const Patch> patches, const WeightedPatchGraph& graph, const CosegConfig& config);

struct ImageResult {
    std::string image_id;
    BinaryMask initial_mask;
    BinaryMask mask;
    SoftMask zbar;
    std::vector<double> energy_trace;  // per outer iteration
};

struct RunTimings {
    double saliency = 0.0;
    double patch_graph = 0.0;
    double optimization = 0.0;
};

struct CosegResult {
    CosegConfig config;
    std::vector<ImageResult> images;
    std::vector<double> energy_trace;     // total per outer iteration
    std::vector<int> diffusion_sweeps;    // per outer iteration
    std::size_t patch_count = 0;
    bool transfer_active = false;
    RunTimings timings;
    std::vector<std::string> warnings;
};

/// Full co-segmentation of one image set. `external_saliency`, when the
/// config asks for it, holds one map per image.
CosegResult cosegment(std::span<const Image> images, const CosegConfig& config,
                      std::span<const SaliencyMap> external_saliency = {});

}  // namespace lstcoseg
