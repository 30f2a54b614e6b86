#include <cmath>
#include <numbers>

#include "lstcoseg/maxflow.hpp"
#include "lstcoseg/mrf.hpp"

namespace lstcoseg {

namespace {

constexpr double kDensityFloor = 1e-12;

double squared_difference(const Rgb& a, const Rgb& b) noexcept
{
    const double dr = a.r - b.r;
    const double dg = a.g - b.g;
    const double db = a.b - b.b;
    return dr * dr + dg * dg + db * db;
}

void check_shapes(const UnaryField& unary, const PairwiseField& pairwise)
{
    const std::size_t n = static_cast<std::size_t>(unary.width) * static_cast<std::size_t>(unary.height);
    if (unary.cost_bg.size() != n || unary.cost_fg.size() != n) throw InvalidInput("unary field is malformed");
    if (pairwise.width != unary.width || pairwise.height != unary.height)
        throw InvalidInput("unary and pairwise fields differ in size");
    if (pairwise.right.size() != n || pairwise.down.size() != n || pairwise.down_right.size() != n ||
        pairwise.down_left.size() != n)
        throw InvalidInput("pairwise field is malformed");
}

}  // namespace

UnaryField unary_costs(const Image& image, const ColorModel& fg, const ColorModel& bg)
{
    const double cap = -std::log(kDensityFloor);
    UnaryField u{image.width(), image.height(), {}, {}};
    u.cost_bg.resize(image.pixel_count());
    u.cost_fg.resize(image.pixel_count());
    const std::span<const Rgb> px = image.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        u.cost_fg[i] = std::min(-fg.log_density(px[i]), cap);
        u.cost_bg[i] = std::min(-bg.log_density(px[i]), cap);
    }
    return u;
}

PairwiseField pairwise_costs(const Image& image, double gamma)
{
    if (!(gamma > 0.0)) throw InvalidInput("pairwise gamma must be positive");
    const int w = image.width();
    const int h = image.height();
    const std::size_t n = image.pixel_count();
    PairwiseField f{w, h, 0.0, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                    std::vector<double>(n, 0.0)};

    double sum = 0.0;
    std::size_t pairs = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Rgb& c = image.at(x, y);
            if (x + 1 < w) { sum += squared_difference(c, image.at(x + 1, y)); ++pairs; }
            if (y + 1 < h) { sum += squared_difference(c, image.at(x, y + 1)); ++pairs; }
            if (x + 1 < w && y + 1 < h) { sum += squared_difference(c, image.at(x + 1, y + 1)); ++pairs; }
            if (x > 0 && y + 1 < h) { sum += squared_difference(c, image.at(x - 1, y + 1)); ++pairs; }
        }
    }
    const double mean = pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
    f.beta = mean > 0.0 ? 1.0 / (2.0 * mean) : 0.0;

    const double diag = gamma / std::numbers::sqrt2;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
            const Rgb& c = image.at(x, y);
            if (x + 1 < w) f.right[i] = gamma * std::exp(-f.beta * squared_difference(c, image.at(x + 1, y)));
            if (y + 1 < h) f.down[i] = gamma * std::exp(-f.beta * squared_difference(c, image.at(x, y + 1)));
            if (x + 1 < w && y + 1 < h)
                f.down_right[i] = diag * std::exp(-f.beta * squared_difference(c, image.at(x + 1, y + 1)));
            if (x > 0 && y + 1 < h)
                f.down_left[i] = diag * std::exp(-f.beta * squared_difference(c, image.at(x - 1, y + 1)));
        }
    }
    return f;
}

double mrf_energy(const UnaryField& unary, const PairwiseField& pairwise, const BinaryMask& labels)
{
    check_shapes(unary, pairwise);
    if (!labels.same_shape(unary.width, unary.height)) throw InvalidInput("labeling does not match the field size");
    const int w = unary.width;
    const int h = unary.height;
    double e = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = labels.index(x, y);
            const bool l = labels.data[i] != 0;
            e += l ? unary.cost_fg[i] : unary.cost_bg[i];
            if (x + 1 < w && l != (labels.at(x + 1, y) != 0)) e += pairwise.right[i];
            if (y + 1 < h && l != (labels.at(x, y + 1) != 0)) e += pairwise.down[i];
            if (x + 1 < w && y + 1 < h && l != (labels.at(x + 1, y + 1) != 0)) e += pairwise.down_right[i];
            if (x > 0 && y + 1 < h && l != (labels.at(x - 1, y + 1) != 0)) e += pairwise.down_left[i];
        }
    }
    return e;
}

BinaryMask graph_cut(const UnaryField& unary, const PairwiseField& pairwise)
{
    check_shapes(unary, pairwise);
    const int w = unary.width;
    const int h = unary.height;
    const int n = w * h;
    MaxFlowGraph g(n, 4 * n);
    // Only cost differences reach the flow network, so negative costs are fine.
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!std::isfinite(unary.cost_bg[k]) || !std::isfinite(unary.cost_fg[k]))
            throw InvalidInput("unary costs must be finite");
        g.add_terminal(i, unary.cost_bg[k], unary.cost_fg[k]);
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int i = y * w + x;
            const auto k = static_cast<std::size_t>(i);
            if (x + 1 < w && pairwise.right[k] > 0.0) g.add_edge(i, i + 1, pairwise.right[k], pairwise.right[k]);
            if (y + 1 < h && pairwise.down[k] > 0.0) g.add_edge(i, i + w, pairwise.down[k], pairwise.down[k]);
            if (x + 1 < w && y + 1 < h && pairwise.down_right[k] > 0.0)
                g.add_edge(i, i + w + 1, pairwise.down_right[k], pairwise.down_right[k]);
            if (x > 0 && y + 1 < h && pairwise.down_left[k] > 0.0)
                g.add_edge(i, i + w - 1, pairwise.down_left[k], pairwise.down_left[k]);
        }
    }
    g.solve();
    BinaryMask mask(w, h, 0);
    for (int i = 0; i < n; ++i) mask.data[static_cast<std::size_t>(i)] = g.in_source_set(i) ? 1 : 0;
    return mask;
}

UnaryField add_transfer_bias(const UnaryField& unary, const SoftMask& zbar, const CoverageMap& cover, double lambda)
{
    if (!zbar.same_shape(unary.width, unary.height) || !cover.same_shape(unary.width, unary.height))
        throw InvalidInput("soft labels or coverage do not match the image size");
    UnaryField biased = unary;
    for (std::size_t i = 0; i < biased.cost_fg.size(); ++i) {
        biased.cost_fg[i] += lambda * static_cast<double>(cover.data[i]) * (1.0 - 2.0 * zbar.data[i]);
    }
    return biased;
}

BinaryMask segment_with_transfer(const UnaryField& unary, const PairwiseField& pairwise, const SoftMask& zbar,
                                 const CoverageMap& cover, double lambda)
{
    return graph_cut(add_transfer_bias(unary, zbar, cover, lambda), pairwise);
}

void split_by_mask(const Image& image, const BinaryMask& mask, std::vector<Rgb>& fg, std::vector<Rgb>& bg)
{
    if (!mask.same_shape(image.width(), image.height())) throw InvalidInput("mask does not match the image size");
    const std::span<const Rgb> px = image.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) (mask.data[i] ? fg : bg).push_back(px[i]);
}

}  // namespace lstcoseg
