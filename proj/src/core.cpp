#include "lstcoseg/core.hpp"

#include <algorithm>
#include <cmath>

namespace lstcoseg {

Image::Image(std::string id, int width, int height)
    : Image(std::move(id), width, height,
            std::vector<Rgb>(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0))))
{
}

Image::Image(std::string id, int width, int height, std::vector<Rgb> pixels)
    : id_(std::move(id)), width_(width), height_(height), pixels_(std::move(pixels))
{
    if (width <= 0 || height <= 0) throw InvalidInput("image '" + id_ + "' has empty dimensions");
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw InvalidInput("image '" + id_ + "' pixel count does not match its dimensions");
    for (const Rgb& p : pixels_) {
        for (double c : {p.r, p.g, p.b}) {
            if (!(c >= 0.0 && c <= 1.0)) throw InvalidInput("image '" + id_ + "' has a channel outside [0,1]");
        }
    }
}

Image Image::from_rgb8(std::string id, int width, int height, std::span<const std::uint8_t> rgb)
{
    if (width <= 0 || height <= 0) throw InvalidInput("image '" + id + "' has empty dimensions");
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (rgb.size() != 3 * n) throw InvalidInput("image '" + id + "' buffer size does not match its dimensions");
    std::vector<Rgb> pixels(n);
    for (std::size_t i = 0; i < n; ++i) {
        pixels[i] = {rgb[3 * i] / 255.0, rgb[3 * i + 1] / 255.0, rgb[3 * i + 2] / 255.0};
    }
    return Image(std::move(id), width, height, std::move(pixels));
}

Image Image::mirrored_horizontally() const
{
    Image out = *this;
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) out.at(x, y) = at(width_ - 1 - x, y);
    }
    return out;
}

void CosegConfig::validate() const
{
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidInput("alpha must be >= 0");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be > 0");
    if (scales.empty()) throw InvalidInput("at least one patch scale is required");
    for (int s : scales) {
        if (s < 48) throw InvalidInput("patch scales must be >= 48");
    }
    if (gmm_components < 1) throw InvalidInput("gmm_components must be >= 1");
    if (outer_iterations < 1) throw InvalidInput("outer_iterations must be >= 1");
    if (diffusion_max_sweeps < 1) throw InvalidInput("diffusion_max_sweeps must be >= 1");
    if (!(diffusion_tol > 0.0)) throw InvalidInput("diffusion_tol must be > 0");
    if (saliency_passes < 2) throw InvalidInput("saliency_passes must be >= 2");
    if (!(saliency_factor > 0.0)) throw InvalidInput("saliency_factor must be > 0");
    if (!(pairwise_gamma > 0.0)) throw InvalidInput("pairwise_gamma must be > 0");
    if (gmm_max_samples < 1) throw InvalidInput("gmm_max_samples must be >= 1");
    if (threads < 0) throw InvalidInput("threads must be >= 0");
}

CoverageMap coverage_map(std::span<const Patch> patches, std::size_t image_index, int width, int height)
{
    CoverageMap cover(width, height, 0);
    for (const Patch& p : patches) {
        if (p.image != image_index) throw InvalidInput("patch " + std::to_string(p.id) + " belongs to a different image");
        if (!p.rect.inside(width, height)) throw InvalidInput("patch " + std::to_string(p.id) + " is out of bounds");
        for (int y = p.rect.y; y < p.rect.y + p.rect.side; ++y) {
            int* row = &cover.at(p.rect.x, y);
            for (int dx = 0; dx < p.rect.side; ++dx) ++row[dx];
        }
    }
    return cover;
}

BinaryMask central_rectangle_mask(int width, int height)
{
    BinaryMask mask(width, height, 0);
    const int w = std::max(1, width / 2);
    const int h = std::max(1, height / 2);
    const int x0 = (width - w) / 2;
    const int y0 = (height - h) / 2;
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) mask.at(x, y) = 1;
    }
    return mask;
}

std::size_t count_foreground(const BinaryMask& mask) noexcept
{
    return static_cast<std::size_t>(std::count_if(mask.data.begin(), mask.data.end(), [](std::uint8_t v) { return v != 0; }));
}

}  // namespace lstcoseg
