#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lstcoseg {

/// Raised when an operation receives arguments that violate its contract
/// (dimension mismatch, wrong block size, empty candidate set, ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-fatal conditions collected while running (skipped scales, reduced
/// GMM component counts, retained masks).
struct Diagnostics {
    std::vector<std::string> warnings;

    void warn(std::string message) { warnings.push_back(std::move(message)); }
};

struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Dense row-major 2-D field.
template <class T>
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int w, int h, T fill = T{})
        : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill)
    {
        if (w < 0 || h < 0) throw InvalidInput("grid dimensions must be non-negative");
    }

    [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
    [[nodiscard]] std::size_t index(int x, int y) const noexcept
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
    }
    T& at(int x, int y) noexcept { return data[index(x, y)]; }
    const T& at(int x, int y) const noexcept { return data[index(x, y)]; }

    [[nodiscard]] bool same_shape(int w, int h) const noexcept { return width == w && height == h; }
    template <class U>
    [[nodiscard]] bool same_shape(const Grid<U>& other) const noexcept
    {
        return width == other.width && height == other.height;
    }

    friend bool operator==(const Grid&, const Grid&) = default;
};

using BinaryMask = Grid<std::uint8_t>;  // 1 = foreground
using SoftMask = Grid<double>;          // values in [0,1]
using CoverageMap = Grid<int>;

/// RGB raster with channels in [0,1].
class Image {
public:
    Image() = default;
    Image(std::string id, int width, int height);
    Image(std::string id, int width, int height, std::vector<Rgb> pixels);

    /// Interleaved 8-bit RGB, channels divided by 255.
    static Image from_rgb8(std::string id, int width, int height, std::span<const std::uint8_t> rgb);

    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] std::size_t pixel_count() const noexcept { return pixels_.size(); }

    [[nodiscard]] const Rgb& at(int x, int y) const noexcept
    {
        return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
    }
    Rgb& at(int x, int y) noexcept
    {
        return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
    }
    [[nodiscard]] std::span<const Rgb> pixels() const noexcept { return pixels_; }

    [[nodiscard]] Image mirrored_horizontally() const;

private:
    std::string id_;
    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
};

/// Square window; (x, y) is the top-left corner.
struct Rect {
    int x = 0;
    int y = 0;
    int side = 0;

    [[nodiscard]] bool contains(int px, int py) const noexcept
    {
        return px >= x && px < x + side && py >= y && py < y + side;
    }
    [[nodiscard]] bool inside(int width, int height) const noexcept
    {
        return side > 0 && x >= 0 && y >= 0 && x + side <= width && y + side <= height;
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

struct Patch {
    int id = 0;                // global index across the image set
    std::size_t image = 0;     // index of the owning image in the set
    Rect rect;
    int scale = 0;             // equals rect.side

    friend bool operator==(const Patch&, const Patch&) = default;
};

enum class SaliencySource { builtin, external };

struct CosegConfig {
    double alpha = 1.0;
    double lambda = 0.3;
    std::vector<int> scales{48, 72, 96, 120};
    int gmm_components = 12;
    int outer_iterations = 10;
    double diffusion_tol = 1e-3;
    int diffusion_max_sweeps = 50;
    bool joint_color_models = true;
    bool transfer_enabled = true;
    SaliencySource saliency_source = SaliencySource::builtin;
    bool saliency_cut = false;   // refine the thresholded map with one GMM + graph-cut round
    int saliency_passes = 4;
    double saliency_factor = 2.0;
    double pairwise_gamma = 50.0;
    int gmm_max_samples = 20000; // EM runs on a seeded subsample of at most this many pixels
    std::uint64_t seed = 0;
    int threads = 0;             // 0 = hardware concurrency

    /// Throws InvalidInput naming the first violated constraint.
    void validate() const;
};

/// Number of patches covering each pixel of the image with index `image_index`.
CoverageMap coverage_map(std::span<const Patch> patches, std::size_t image_index, int width, int height);

/// Mask with the central rectangle of half width and half height set.
BinaryMask central_rectangle_mask(int width, int height);

std::size_t count_foreground(const BinaryMask& mask) noexcept;

}  // namespace lstcoseg
