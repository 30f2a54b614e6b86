#include "lstcoseg/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "lstcoseg/parallel.hpp"

namespace lstcoseg {

namespace {

constexpr std::size_t kCoordinateChunk = 64;

void check_alignment(const PatchLabels& z, const PatchLabels& y, const WeightedPatchGraph& graph)
{
    if (z.patch_count() != y.patch_count() || z.length() != y.length())
        throw InvalidInput("soft and discrete patch labels are misaligned");
    if (graph.rows.size() != z.patch_count() || graph.incoming.size() != z.patch_count())
        throw InvalidInput("patch graph does not match the label set");
}

}  // namespace

std::vector<double> extract_patch_labels(const SoftMask& field, const Patch& patch)
{
    if (!patch.rect.inside(field.width, field.height)) throw InvalidInput("patch " + std::to_string(patch.id) + " is out of bounds");
    return resample_square(field.data, field.width, patch.rect, kPatchSide);
}

SoftMask to_soft(const BinaryMask& mask)
{
    SoftMask soft(mask.width, mask.height, 0.0);
    for (std::size_t i = 0; i < mask.size(); ++i) soft.data[i] = mask.data[i] ? 1.0 : 0.0;
    return soft;
}

std::vector<double> extract_patch_labels(const BinaryMask& mask, const Patch& patch)
{
    return extract_patch_labels(to_soft(mask), patch);
}

PatchLabels extract_labels(std::span<const SoftMask> fields, std::span<const Patch> patches)
{
    PatchLabels out(patches.size(), kPatchPixels);
    for (std::size_t k = 0; k < patches.size(); ++k) {
        if (patches[k].image >= fields.size()) throw InvalidInput("patch references a missing label field");
        const std::vector<double> v = extract_patch_labels(fields[patches[k].image], patches[k]);
        std::copy(v.begin(), v.end(), out.row(k).begin());
    }
    return out;
}

Backprojection backproject(const PatchLabels& z, std::span<const Patch> patches, std::size_t image_index, int width,
                           int height)
{
    if (z.patch_count() != patches.size()) throw InvalidInput("label count does not match patch count");
    if (z.length() != static_cast<std::size_t>(kPatchPixels)) throw InvalidInput("back-projection expects 48x48 label vectors");
    Backprojection out{SoftMask(width, height, 0.0), CoverageMap(width, height, 0)};
    const Rect grid{0, 0, kPatchSide};
    for (std::size_t k = 0; k < patches.size(); ++k) {
        const Patch& p = patches[k];
        if (p.image != image_index) continue;
        if (!p.rect.inside(width, height)) throw InvalidInput("patch " + std::to_string(p.id) + " is out of bounds");
        const std::vector<double> up = resample_square(z.row(k), kPatchSide, grid, p.rect.side);
        for (int v = 0; v < p.rect.side; ++v) {
            for (int u = 0; u < p.rect.side; ++u) {
                const std::size_t i = out.zbar.index(p.rect.x + u, p.rect.y + v);
                out.zbar.data[i] += up[static_cast<std::size_t>(v) * static_cast<std::size_t>(p.rect.side) + static_cast<std::size_t>(u)];
                ++out.cover.data[i];
            }
        }
    }
    for (std::size_t i = 0; i < out.zbar.size(); ++i) {
        out.zbar.data[i] = out.cover.data[i] > 0 ? out.zbar.data[i] / out.cover.data[i] : 0.5;
    }
    return out;
}

double diffusion_objective(const PatchLabels& z, const PatchLabels& y, const WeightedPatchGraph& graph, double alpha,
                           double lambda)
{
    check_alignment(z, y, graph);
    double reconstruction = 0.0;
    double coupling = 0.0;
    std::vector<double> r(z.length());
    for (std::size_t i = 0; i < z.patch_count(); ++i) {
        const auto zi = z.row(i);
        const auto yi = y.row(i);
        for (std::size_t c = 0; c < z.length(); ++c) coupling += (zi[c] - yi[c]) * (zi[c] - yi[c]);
        if (graph.rows[i].empty()) continue;
        std::copy(zi.begin(), zi.end(), r.begin());
        for (const WeightedEdge& e : graph.rows[i]) {
            const auto zj = z.row(static_cast<std::size_t>(e.patch));
            for (std::size_t c = 0; c < r.size(); ++c) r[c] -= e.weight * zj[c];
        }
        for (double v : r) reconstruction += v * v;
    }
    return alpha * reconstruction + lambda * coupling;
}

PatchLabels diffusion_sweep(PatchLabels z, const PatchLabels& y, const WeightedPatchGraph& graph, double alpha,
                            double lambda, int threads, double* objective)
{
    check_alignment(z, y, graph);
    if (!(alpha >= 0.0)) throw InvalidInput("alpha must be >= 0");
    if (!(lambda > 0.0)) throw InvalidInput("lambda must be > 0");

    if (alpha == 0.0) {
        if (objective) *objective = 0.0;
        return y;
    }

    const std::size_t n = z.patch_count();
    const std::size_t len = z.length();

    std::vector<double> denominator(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (const WeightedEdge& e : graph.incoming[i]) sq += e.weight * e.weight;
        denominator[i] = (graph.rows[i].empty() ? 0.0 : alpha) + lambda + alpha * sq;
    }

    // residuals r_j = z_j - sum_k w_jk z_k, kept current as patches update
    PatchLabels residual(n, len, 0.0);
    const std::size_t chunks = (len + kCoordinateChunk - 1) / kCoordinateChunk;
    std::vector<double> chunk_objective(chunks, 0.0);
    parallel_for(chunks, threads, [&](std::size_t chunk) {
        const std::size_t c0 = chunk * kCoordinateChunk;
        const std::size_t c1 = std::min(len, c0 + kCoordinateChunk);
        for (std::size_t j = 0; j < n; ++j) {
            if (graph.rows[j].empty()) continue;
            auto rj = residual.row(j);
            const auto zj = z.row(j);
            for (std::size_t c = c0; c < c1; ++c) rj[c] = zj[c];
            for (const WeightedEdge& e : graph.rows[j]) {
                const auto zk = z.row(static_cast<std::size_t>(e.patch));
                for (std::size_t c = c0; c < c1; ++c) rj[c] -= e.weight * zk[c];
            }
        }

        std::vector<double> acc(c1 - c0);
        for (std::size_t i = 0; i < n; ++i) {
            auto zi = z.row(i);
            const auto yi = y.row(i);
            if (graph.rows[i].empty() && graph.incoming[i].empty()) {
                // isolated patches keep their discrete labels
                std::copy(yi.begin() + static_cast<std::ptrdiff_t>(c0), yi.begin() + static_cast<std::ptrdiff_t>(c1),
                          zi.begin() + static_cast<std::ptrdiff_t>(c0));
                continue;
            }
            std::fill(acc.begin(), acc.end(), 0.0);
            for (const WeightedEdge& e : graph.rows[i]) {
                const auto zj = z.row(static_cast<std::size_t>(e.patch));
                for (std::size_t c = c0; c < c1; ++c) acc[c - c0] += e.weight * zj[c];
            }
            for (const WeightedEdge& e : graph.incoming[i]) {
                // r_{j\i} = r_j + w_ji z_i
                const auto rj = residual.row(static_cast<std::size_t>(e.patch));
                for (std::size_t c = c0; c < c1; ++c) acc[c - c0] += e.weight * (rj[c] + e.weight * zi[c]);
            }
            const bool has_row = !graph.rows[i].empty();
            for (std::size_t c = c0; c < c1; ++c) {
                const double next = (alpha * acc[c - c0] + lambda * yi[c]) / denominator[i];
                const double delta = next - zi[c];
                zi[c] = next;
                if (delta == 0.0) continue;
                if (has_row) residual.row(i)[c] += delta;
                for (const WeightedEdge& e : graph.incoming[i]) residual.row(static_cast<std::size_t>(e.patch))[c] -= e.weight * delta;
            }
        }

        double reconstruction = 0.0;
        double coupling = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto zi = z.row(i);
            const auto yi = y.row(i);
            const auto ri = residual.row(i);
            const bool has_row = !graph.rows[i].empty();
            for (std::size_t c = c0; c < c1; ++c) {
                coupling += (zi[c] - yi[c]) * (zi[c] - yi[c]);
                if (has_row) reconstruction += ri[c] * ri[c];
            }
        }
        chunk_objective[chunk] = alpha * reconstruction + lambda * coupling;
    });
    if (objective) {
        *objective = 0.0;
        for (double v : chunk_objective) *objective += v;
    }
    return z;
}

DiffusionResult iterate_diffusion(const PatchLabels& y, const WeightedPatchGraph& graph, double alpha, double lambda,
                                  double tol, int max_sweeps, const LabelNormalizer& normalize, int threads)
{
    DiffusionResult result{y, 0, 0.0, {}};
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double objective = 0.0;
        PatchLabels next = diffusion_sweep(result.z, y, graph, alpha, lambda, threads, &objective);
        result.objective_trace.push_back(objective);
        if (normalize) normalize(next);
        double change = 0.0;
        const auto a = next.values();
        const auto b = result.z.values();
        for (std::size_t k = 0; k < a.size(); ++k) change = std::max(change, std::abs(a[k] - b[k]));
        result.z = std::move(next);
        result.sweeps = sweep + 1;
        result.last_change = change;
        if (change < tol) break;
    }
    return result;
}

void normalize_per_image(PatchLabels& z, std::span<const Patch> patches, std::span<const Image> images)
{
    for (std::size_t m = 0; m < images.size(); ++m) {
        Backprojection bp = backproject(z, patches, m, images[m].width(), images[m].height());
        SoftMask& field = bp.zbar;
        const auto [lo, hi] = std::minmax_element(field.data.begin(), field.data.end());
        const double min = *lo;
        const double range = *hi - *lo;
        for (double& v : field.data) v = range > 0.0 ? (v - min) / range : 0.5;
        for (std::size_t k = 0; k < patches.size(); ++k) {
            if (patches[k].image != m) continue;
            const std::vector<double> v = extract_patch_labels(field, patches[k]);
            std::copy(v.begin(), v.end(), z.row(k).begin());
        }
    }
}

DiffusionResult run_diffusion(const PatchLabels& y, const WeightedPatchGraph& graph, const CosegConfig& config,
                              std::span<const Patch> patches, std::span<const Image> images)
{
    if (!config.transfer_enabled) return {y, 0, 0.0, {}};
    const LabelNormalizer normalize = [&](PatchLabels& z) { normalize_per_image(z, patches, images); };
    return iterate_diffusion(y, graph, config.alpha, config.lambda, config.diffusion_tol, config.diffusion_max_sweeps,
                             normalize, config.threads);
}

}  // namespace lstcoseg
