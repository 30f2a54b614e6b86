#include "lstcoseg/eval.hpp"

namespace lstcoseg {

EvalRecord score(const BinaryMask& pred, const BinaryMask& gt, std::string image_id)
{
    if (!pred.same_shape(gt)) throw InvalidInput("prediction and ground truth differ in size");
    EvalRecord r;
    r.image_id = std::move(image_id);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred.data[i] != 0;
        const bool g = gt.data[i] != 0;
        if (p && g) ++r.tp;
        else if (p) ++r.fp;
        else if (g) ++r.fn;
        else ++r.tn;
    }
    const std::uint64_t total = r.tp + r.fp + r.fn + r.tn;
    r.acc = total > 0 ? static_cast<double>(r.tp + r.tn) / static_cast<double>(total) : 1.0;
    const std::uint64_t uni = r.tp + r.fp + r.fn;
    r.iou = uni > 0 ? static_cast<double>(r.tp) / static_cast<double>(uni) : 1.0;
    return r;
}

EvalSummary aggregate(std::span<const EvalRecord> records)
{
    if (records.empty()) throw InvalidInput("cannot aggregate an empty record list");
    EvalSummary s;
    for (const EvalRecord& r : records) {
        s.mean_acc += r.acc;
        s.mean_iou += r.iou;
    }
    s.mean_acc /= static_cast<double>(records.size());
    s.mean_iou /= static_cast<double>(records.size());
    return s;
}

}  // namespace lstcoseg
