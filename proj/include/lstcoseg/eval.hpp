#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "lstcoseg/core.hpp"

namespace lstcoseg {

struct EvalRecord {
    std::string image_id;
    double acc = 0.0;
    double iou = 0.0;
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
};

/// Pixel accuracy and foreground intersection-over-union. IOU is 1 when
/// neither mask has foreground.
EvalRecord score(const BinaryMask& pred, const BinaryMask& gt, std::string image_id = {});

struct EvalSummary {
    double mean_acc = 0.0;
    double mean_iou = 0.0;
};

/// Unweighted means over images.
EvalSummary aggregate(std::span<const EvalRecord> records);

}  // namespace lstcoseg
