#pragma once

#include <array>
#include <span>
#include <vector>

#include "lstcoseg/core.hpp"

namespace lstcoseg {

inline constexpr int kPatchSide = 48;
inline constexpr int kPatchPixels = kPatchSide * kPatchSide;

// HOG layout
inline constexpr int kHogCellSize = 8;
inline constexpr int kHogCells = kPatchSide / kHogCellSize;  // 6 per side
inline constexpr int kHogBins = 9;
inline constexpr int kHogBlocks = kHogCells - 1;             // 5 per side
inline constexpr int kHogDimension = kHogBlocks * kHogBlocks * 2 * 2 * kHogBins;  // 900

/// 48x48 RGB block, row-major.
using PatchBlock = std::vector<Rgb>;

struct PatchDescriptor {
    int patch_id = 0;
    std::vector<double> hog;  // kHogDimension entries
};

/// Sliding windows at each scale: positions 0, s, 2s, ... plus a final
/// window flush with the right/bottom edge when the side is not a multiple
/// of s. Ids start at `first_id`. Scales exceeding the image are skipped with
/// a warning.
std::vector<Patch> sample_patches(const Image& image, std::size_t image_index, std::span<const int> scales,
                                  int first_id = 0, Diagnostics* diagnostics = nullptr);

/// Source coordinate sampled for output index `dst` when resampling a run of
/// `src_len` samples to `dst_len` (pixel centers aligned, clamped to range).
double resample_coordinate(int dst, int src_len, int dst_len) noexcept;

/// Bilinear resampling of an arbitrary scalar field window to side x side.
std::vector<double> resample_square(std::span<const double> field, int field_width, const Rect& rect, int side);

PatchBlock normalize_patch(const Image& image, const Patch& patch);

/// Unnormalized 9-bin orientation histograms for the 6x6 cells, row-major.
std::vector<std::array<double, kHogBins>> hog_cell_histograms(std::span<const Rgb> block);

std::vector<double> hog_descriptor(std::span<const Rgb> block);

/// Descriptors for every patch, computed in parallel.
std::vector<PatchDescriptor> describe_patches(std::span<const Image> images, std::span<const Patch> patches, int threads = 0);

}  // namespace lstcoseg
