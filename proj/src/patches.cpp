#include "lstcoseg/patches.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lstcoseg/parallel.hpp"

namespace lstcoseg {

namespace {

constexpr double kBlockEpsilon = 1e-6;

std::vector<int> window_positions(int length, int side)
{
    std::vector<int> pos;
    for (int p = 0; p + side <= length; p += side) pos.push_back(p);
    if (length % side != 0) pos.push_back(length - side);
    return pos;
}

struct Tap {
    int i0;
    int i1;
    double f;
};

Tap tap(int dst, int src_len, int dst_len) noexcept
{
    const double s = resample_coordinate(dst, src_len, dst_len);
    const int i0 = static_cast<int>(std::floor(s));
    return {i0, std::min(i0 + 1, src_len - 1), s - i0};
}

}  // namespace

std::vector<Patch> sample_patches(const Image& image, std::size_t image_index, std::span<const int> scales, int first_id,
                                  Diagnostics* diagnostics)
{
    std::vector<Patch> out;
    int id = first_id;
    for (int s : scales) {
        if (s <= 0) throw InvalidInput("patch scale must be positive");
        if (s > image.width() || s > image.height()) {
            if (diagnostics) {
                diagnostics->warn("scale " + std::to_string(s) + " skipped for image '" + image.id() + "' (" +
                                  std::to_string(image.width()) + "x" + std::to_string(image.height()) + ")");
            }
            continue;
        }
        const std::vector<int> xs = window_positions(image.width(), s);
        const std::vector<int> ys = window_positions(image.height(), s);
        for (int y : ys) {
            for (int x : xs) out.push_back({id++, image_index, Rect{x, y, s}, s});
        }
    }
    return out;
}

double resample_coordinate(int dst, int src_len, int dst_len) noexcept
{
    const double s = (dst + 0.5) * (static_cast<double>(src_len) / static_cast<double>(dst_len)) - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(src_len - 1));
}

std::vector<double> resample_square(std::span<const double> field, int field_width, const Rect& rect, int side)
{
    std::vector<double> out(static_cast<std::size_t>(side) * static_cast<std::size_t>(side));
    auto at = [&](int x, int y) {
        return field[static_cast<std::size_t>(rect.y + y) * static_cast<std::size_t>(field_width) +
                     static_cast<std::size_t>(rect.x + x)];
    };
    std::vector<Tap> xs(static_cast<std::size_t>(side));
    for (int u = 0; u < side; ++u) xs[static_cast<std::size_t>(u)] = tap(u, rect.side, side);
    for (int v = 0; v < side; ++v) {
        const Tap ty = tap(v, rect.side, side);
        for (int u = 0; u < side; ++u) {
            const Tap& tx = xs[static_cast<std::size_t>(u)];
            const double top = (1.0 - tx.f) * at(tx.i0, ty.i0) + tx.f * at(tx.i1, ty.i0);
            const double bottom = (1.0 - tx.f) * at(tx.i0, ty.i1) + tx.f * at(tx.i1, ty.i1);
            out[static_cast<std::size_t>(v) * static_cast<std::size_t>(side) + static_cast<std::size_t>(u)] =
                (1.0 - ty.f) * top + ty.f * bottom;
        }
    }
    return out;
}

PatchBlock normalize_patch(const Image& image, const Patch& patch)
{
    const Rect& r = patch.rect;
    if (!r.inside(image.width(), image.height())) throw InvalidInput("patch " + std::to_string(patch.id) + " is out of bounds");
    PatchBlock block(kPatchPixels);
    for (int v = 0; v < kPatchSide; ++v) {
        const Tap ty = tap(v, r.side, kPatchSide);
        for (int u = 0; u < kPatchSide; ++u) {
            const Tap tx = tap(u, r.side, kPatchSide);
            const Rgb& a = image.at(r.x + tx.i0, r.y + ty.i0);
            const Rgb& b = image.at(r.x + tx.i1, r.y + ty.i0);
            const Rgb& c = image.at(r.x + tx.i0, r.y + ty.i1);
            const Rgb& d = image.at(r.x + tx.i1, r.y + ty.i1);
            auto mix = [&](double Rgb::*ch) {
                const double top = (1.0 - tx.f) * (a.*ch) + tx.f * (b.*ch);
                const double bottom = (1.0 - tx.f) * (c.*ch) + tx.f * (d.*ch);
                return (1.0 - ty.f) * top + ty.f * bottom;
            };
            block[static_cast<std::size_t>(v * kPatchSide + u)] = {mix(&Rgb::r), mix(&Rgb::g), mix(&Rgb::b)};
        }
    }
    return block;
}

std::vector<std::array<double, kHogBins>> hog_cell_histograms(std::span<const Rgb> block)
{
    if (block.size() != static_cast<std::size_t>(kPatchPixels)) throw InvalidInput("HOG expects a 48x48 block");

    std::vector<double> gray(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) gray[i] = 0.299 * block[i].r + 0.587 * block[i].g + 0.114 * block[i].b;
    auto g = [&](int x, int y) {
        x = std::clamp(x, 0, kPatchSide - 1);
        y = std::clamp(y, 0, kPatchSide - 1);
        return gray[static_cast<std::size_t>(y * kPatchSide + x)];
    };

    constexpr double kBinWidth = 180.0 / kHogBins;
    std::vector<std::array<double, kHogBins>> cells(static_cast<std::size_t>(kHogCells * kHogCells));
    for (auto& c : cells) c.fill(0.0);
    for (int y = 0; y < kPatchSide; ++y) {
        for (int x = 0; x < kPatchSide; ++x) {
            const double gx = g(x + 1, y) - g(x - 1, y);
            const double gy = g(x, y + 1) - g(x, y - 1);
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            double angle = std::atan2(gy, gx) * (180.0 / std::numbers::pi);
            if (angle < 0.0) angle += 180.0;
            if (angle >= 180.0) angle -= 180.0;
            // bin k is centered on k * 20 degrees
            const double pos = angle / kBinWidth;
            const int lo = static_cast<int>(std::floor(pos));
            const double f = pos - lo;
            auto& hist = cells[static_cast<std::size_t>((y / kHogCellSize) * kHogCells + x / kHogCellSize)];
            hist[static_cast<std::size_t>(lo % kHogBins)] += mag * (1.0 - f);
            hist[static_cast<std::size_t>((lo + 1) % kHogBins)] += mag * f;
        }
    }
    return cells;
}

std::vector<double> hog_descriptor(std::span<const Rgb> block)
{
    const auto cells = hog_cell_histograms(block);
    std::vector<double> out;
    out.reserve(kHogDimension);
    for (int by = 0; by < kHogBlocks; ++by) {
        for (int bx = 0; bx < kHogBlocks; ++bx) {
            const std::size_t start = out.size();
            double norm2 = 0.0;
            for (int cy = 0; cy < 2; ++cy) {
                for (int cx = 0; cx < 2; ++cx) {
                    for (double v : cells[static_cast<std::size_t>((by + cy) * kHogCells + bx + cx)]) {
                        out.push_back(v);
                        norm2 += v * v;
                    }
                }
            }
            const double scale = 1.0 / std::sqrt(norm2 + kBlockEpsilon * kBlockEpsilon);
            for (std::size_t i = start; i < out.size(); ++i) out[i] *= scale;
        }
    }
    return out;
}

std::vector<PatchDescriptor> describe_patches(std::span<const Image> images, std::span<const Patch> patches, int threads)
{
    std::vector<PatchDescriptor> out(patches.size());
    parallel_for(patches.size(), threads, [&](std::size_t k) {
        const Patch& p = patches[k];
        if (p.image >= images.size()) throw InvalidInput("patch " + std::to_string(p.id) + " references a missing image");
        out[k] = {p.id, hog_descriptor(normalize_patch(images[p.image], p))};
    });
    return out;
}

}  // namespace lstcoseg
