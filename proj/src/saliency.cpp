#include "lstcoseg/saliency.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>

#include "lstcoseg/mrf.hpp"

namespace lstcoseg {

namespace {

struct BarrierState {
    double dist = std::numeric_limits<double>::infinity();
    std::array<double, 3> hi{};
    std::array<double, 3> lo{};
};

bool better(const BarrierState& a, const BarrierState& b) noexcept
{
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.hi != b.hi) return a.hi < b.hi;
    return a.lo < b.lo;
}

std::array<double, 3> channels(const Rgb& c) noexcept { return {c.r, c.g, c.b}; }

// Relaxes p through neighbor q; returns true on improvement.
bool relax(BarrierState& p, const BarrierState& q, const std::array<double, 3>& color) noexcept
{
    std::array<double, 3> hi{};
    std::array<double, 3> lo{};
    double cost = 0.0;
    for (int c = 0; c < 3; ++c) {
        hi[c] = std::max(q.hi[c], color[c]);
        lo[c] = std::min(q.lo[c], color[c]);
        cost = std::max(cost, hi[c] - lo[c]);
    }
    if (cost < p.dist) {
        p.dist = cost;
        p.hi = hi;
        p.lo = lo;
        return true;
    }
    return false;
}

// One raster scan. dy = +1 scans top-down (neighbor above), -1 bottom-up;
// dx = +1 scans left-to-right (neighbor on the left), -1 right-to-left.
std::vector<BarrierState> scan(const Image& image, std::vector<BarrierState> state, int dx, int dy)
{
    const int w = image.width();
    const int h = image.height();
    auto at = [&](int x, int y) -> BarrierState& {
        return state[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
    };
    for (int k = 0; k < h; ++k) {
        const int y = dy > 0 ? k : h - 1 - k;
        for (int m = 0; m < w; ++m) {
            const int x = dx > 0 ? m : w - 1 - m;
            const std::array<double, 3> color = channels(image.at(x, y));
            BarrierState& p = at(x, y);
            const int vy = y - dy;
            if (vy >= 0 && vy < h) relax(p, at(x, vy), color);
            const int hx = x - dx;
            if (hx >= 0 && hx < w) relax(p, at(hx, y), color);
        }
    }
    return state;
}

}  // namespace

Grid<double> barrier_distance(const Image& image, int passes)
{
    if (passes < 1) throw InvalidInput("barrier distance needs at least one pass");
    const int w = image.width();
    const int h = image.height();
    std::vector<BarrierState> state(image.pixel_count());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            BarrierState& s = state[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
            s.hi = s.lo = channels(image.at(x, y));
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1) s.dist = 0.0;
        }
    }

    for (int pass = 0; pass < passes; ++pass) {
        const int dy = pass % 2 == 0 ? 1 : -1;
        std::vector<BarrierState> a = scan(image, state, 1, dy);
        std::vector<BarrierState> b = scan(image, std::move(state), -1, dy);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (better(b[i], a[i])) a[i] = b[i];
        }
        state = std::move(a);
    }

    Grid<double> dist(w, h, 0.0);
    for (std::size_t i = 0; i < state.size(); ++i) dist.data[i] = state[i].dist;
    return dist;
}

SaliencyMap normalize_saliency(SaliencyMap map)
{
    if (map.data.empty()) return map;
    const auto [lo, hi] = std::minmax_element(map.data.begin(), map.data.end());
    const double min = *lo;
    const double range = *hi - *lo;
    for (double& v : map.data) v = range > 0.0 ? (v - min) / range : 0.0;
    return map;
}

SaliencyMap mbd_saliency(const Image& image, int passes)
{
    if (passes < 2) throw InvalidInput("saliency needs at least two raster passes");
    return normalize_saliency(barrier_distance(image, passes));
}

BinaryMask threshold_saliency(const SaliencyMap& map, double factor)
{
    if (!(factor > 0.0)) throw InvalidInput("saliency threshold factor must be positive");
    if (map.data.empty()) throw InvalidInput("empty saliency map");

    auto apply = [&](double threshold) {
        BinaryMask mask(map.width, map.height, 0);
        for (std::size_t i = 0; i < map.data.size(); ++i) mask.data[i] = map.data[i] >= threshold ? 1 : 0;
        return mask;
    };
    auto degenerate = [](const BinaryMask& mask) {
        const std::size_t fg = count_foreground(mask);
        return fg == 0 || fg == mask.size();
    };

    const double mean = std::accumulate(map.data.begin(), map.data.end(), 0.0) / static_cast<double>(map.data.size());
    BinaryMask mask = apply(factor * mean);
    if (!degenerate(mask)) return mask;

    const double max = *std::max_element(map.data.begin(), map.data.end());
    mask = apply(0.5 * max);
    if (!degenerate(mask)) return mask;

    return central_rectangle_mask(map.width, map.height);
}

BinaryMask saliency_cut(const Image& image, const SaliencyMap& map, const CosegConfig& config, Diagnostics* diagnostics)
{
    if (!map.same_shape(image.width(), image.height())) throw InvalidInput("saliency map does not match the image size");
    BinaryMask seed = threshold_saliency(map, config.saliency_factor);

    std::vector<Rgb> fg;
    std::vector<Rgb> bg;
    split_by_mask(image, seed, fg, bg);
    const auto cap = static_cast<std::size_t>(config.gmm_max_samples);
    const ColorModel fg_model = fit_gmm(subsample(fg, cap, config.seed), config.gmm_components, config.seed, diagnostics).model;
    const ColorModel bg_model =
        fit_gmm(subsample(bg, cap, config.seed + 1), config.gmm_components, config.seed + 1, diagnostics).model;

    BinaryMask cut = graph_cut(unary_costs(image, fg_model, bg_model), pairwise_costs(image, config.pairwise_gamma));
    const std::size_t count = count_foreground(cut);
    if (count == 0 || count == cut.size()) {
        if (diagnostics) diagnostics->warn("saliency cut for '" + image.id() + "' was degenerate; kept the thresholded seed");
        return seed;
    }
    return cut;
}

}  // namespace lstcoseg
