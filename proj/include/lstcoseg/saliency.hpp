#pragma once

#include "lstcoseg/core.hpp"

namespace lstcoseg {

/// Per-pixel saliency in [0,1].
using SaliencyMap = Grid<double>;

/// Minimum barrier distance from the image border, approximated by
/// alternating raster scans. The barrier of a path is the largest per-channel
/// range (max - min) of the colors along it. Each pass runs two mirrored
/// scans from the same state and keeps the better candidate per pixel, which
/// makes the result exactly equivariant under horizontal mirroring. Odd
/// passes scan top-down, even passes bottom-up.
///
/// Returns the raw distances; see mbd_saliency for the normalized map.
Grid<double> barrier_distance(const Image& image, int passes);

SaliencyMap mbd_saliency(const Image& image, int passes = 4);

/// Min-max normalization; a constant map becomes all zeros.
SaliencyMap normalize_saliency(SaliencyMap map);

/// Foreground where value >= factor * mean. Empty or full results fall back
/// to value >= 0.5 * max, then to the central rectangle.
BinaryMask threshold_saliency(const SaliencyMap& map, double factor = 2.0);

/// Thresholded map refined by one GMM fit and a single graph cut. A
/// degenerate cut returns the thresholded seed instead.
BinaryMask saliency_cut(const Image& image, const SaliencyMap& map, const CosegConfig& config,
                        Diagnostics* diagnostics = nullptr);

}  // namespace lstcoseg
