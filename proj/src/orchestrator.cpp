#include "lstcoseg/orchestrator.hpp"

#include <chrono>

#include "lstcoseg/parallel.hpp"

namespace lstcoseg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
    // splitmix64 finalizer over a simple combination
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (1 + a) + 0xbf58476d1ce4e5b9ULL * (1 + b) + 0x94d049bb133111ebULL * (1 + c);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Runs fn for every image in parallel; failures become StageErrors naming
// the stage and image. Warnings are merged in image order.
template <class Fn>
void per_image(std::span<const Image> images, int threads, const char* stage, Diagnostics& diagnostics, Fn&& fn)
{
    std::vector<Diagnostics> local(images.size());
    parallel_for(images.size(), threads, [&](std::size_t m) {
        try {
            fn(m, local[m]);
        } catch (const StageError&) {
            throw;
        } catch (const InvalidInput& e) {
            throw StageError(stage, images[m].id(), e.what(), true);
        } catch (const std::exception& e) {
            throw StageError(stage, images[m].id(), e.what(), false);
        }
    });
    for (const Diagnostics& d : local) {
        for (const auto& w : d.warnings) diagnostics.warn(w);
    }
}

template <class Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const InvalidInput& e) {
        throw StageError(stage, "", e.what(), true);
    } catch (const std::exception& e) {
        throw StageError(stage, "", e.what(), false);
    }
}

ColorModel fit_model(std::span<const Rgb> pixels, const CosegConfig& config, std::uint64_t seed, Diagnostics* diagnostics)
{
    const std::vector<Rgb> sample = subsample(pixels, static_cast<std::size_t>(config.gmm_max_samples), seed);
    return fit_gmm(sample, config.gmm_components, seed ^ 0x5851f42d4c957f2dULL, diagnostics).model;
}

}  // namespace

StageError::StageError(std::string stage, std::string image, const std::string& what, bool invalid_input)
    : std::runtime_error(stage + (image.empty() ? std::string() : " [" + image + "]") + ": " + what),
      stage_(std::move(stage)),
      image_(std::move(image)),
      invalid_input_(invalid_input)
{
}

std::vector<ColorModelPair> fit_color_models(std::span<const Image> images, std::span<const BinaryMask> masks,
                                             const CosegConfig& config, int iteration, Diagnostics* diagnostics)
{
    if (images.size() != masks.size()) throw InvalidInput("one mask per image is required");
    const auto it = static_cast<std::uint64_t>(iteration);

    if (config.joint_color_models) {
        std::vector<Rgb> fg;
        std::vector<Rgb> bg;
        for (std::size_t m = 0; m < images.size(); ++m) split_by_mask(images[m], masks[m], fg, bg);
        if (fg.empty() || bg.empty()) throw InvalidInput("masks leave no foreground or no background pixels");
        Diagnostics local[2];
        ColorModel models[2];
        parallel_for(2, config.threads, [&](std::size_t k) {
            models[k] = fit_model(k == 0 ? fg : bg, config, mix_seed(config.seed, it, 0, k), &local[k]);
        });
        if (diagnostics) {
            for (const auto& d : local) {
                for (const auto& w : d.warnings) diagnostics->warn(w);
            }
        }
        return std::vector<ColorModelPair>(images.size(), ColorModelPair{models[0], models[1]});
    }

    std::vector<ColorModelPair> out(images.size());
    std::vector<Diagnostics> local(images.size());
    parallel_for(images.size(), config.threads, [&](std::size_t m) {
        std::vector<Rgb> fg;
        std::vector<Rgb> bg;
        split_by_mask(images[m], masks[m], fg, bg);
        if (fg.empty() || bg.empty())
            throw InvalidInput("mask of '" + images[m].id() + "' leaves no foreground or no background pixels");
        out[m].fg = fit_model(fg, config, mix_seed(config.seed, it, m + 1, 0), &local[m]);
        out[m].bg = fit_model(bg, config, mix_seed(config.seed, it, m + 1, 1), &local[m]);
    });
    if (diagnostics) {
        for (const auto& d : local) {
            for (const auto& w : d.warnings) diagnostics->warn(w);
        }
    }
    return out;
}

PatchGraph build_patch_graph(std::span<const Image> images, const CosegConfig& config, Diagnostics* diagnostics)
{
    PatchGraph g;
    for (std::size_t m = 0; m < images.size(); ++m) {
        std::vector<Patch> p = sample_patches(images[m], m, config.scales, static_cast<int>(g.patches.size()), diagnostics);
        g.patches.insert(g.patches.end(), p.begin(), p.end());
    }
    g.descriptors = describe_patches(images, g.patches, config.threads);
    g.neighbors = build_neighborhood(g.patches, g.descriptors, config.threads);
    g.weights = learn_graph_weights(g.neighbors, g.descriptors, config.threads);
    return g;
}

EnergyTerms energy(std::span<const Image> images, std::span<const BinaryMask> masks, const PatchLabels& z,
                   std::span<const ColorModelPair> models, std::span<const PairwiseField> pairwise,
                   std::span<const Patch> patches, const WeightedPatchGraph& graph, const CosegConfig& config)
{
    const std::size_t m_count = images.size();
    if (masks.size() != m_count || models.size() != m_count || pairwise.size() != m_count)
        throw InvalidInput("energy needs one mask, model pair and pairwise field per image");
    if (z.patch_count() != patches.size() || graph.rows.size() != patches.size())
        throw InvalidInput("soft labels, patches and graph are misaligned");

    EnergyTerms e;
    e.per_image.assign(m_count, 0.0);
    for (std::size_t m = 0; m < m_count; ++m) {
        const double seg = mrf_energy(unary_costs(images[m], models[m].fg, models[m].bg), pairwise[m], masks[m]);
        e.segmentation += seg;
        e.per_image[m] += seg;
    }
    if (patches.empty()) return e;

    std::vector<SoftMask> fields;
    fields.reserve(m_count);
    for (const BinaryMask& mask : masks) fields.push_back(to_soft(mask));
    const PatchLabels y = extract_labels(fields, patches);

    std::vector<double> r(z.length());
    for (std::size_t i = 0; i < patches.size(); ++i) {
        const auto zi = z.row(i);
        const auto yi = y.row(i);
        double coupling = 0.0;
        for (std::size_t c = 0; c < zi.size(); ++c) coupling += (zi[c] - yi[c]) * (zi[c] - yi[c]);
        double recon = 0.0;
        if (!graph.rows[i].empty()) {
            std::copy(zi.begin(), zi.end(), r.begin());
            for (const WeightedEdge& w : graph.rows[i]) {
                const auto zj = z.row(static_cast<std::size_t>(w.patch));
                for (std::size_t c = 0; c < r.size(); ++c) r[c] -= w.weight * zj[c];
            }
            for (double v : r) recon += v * v;
        }
        e.coupling += config.lambda * coupling;
        e.reconstruction += config.alpha * recon;
        e.per_image[patches[i].image] += config.lambda * coupling + config.alpha * recon;
    }
    return e;
}

CosegResult cosegment(std::span<const Image> images, const CosegConfig& config, std::span<const SaliencyMap> external_saliency)
{
    run_stage("config", [&] {
        config.validate();
        if (images.empty()) throw InvalidInput("at least one image is required");
        return 0;
    });
    for (const Image& im : images) {
        if (im.width() < kPatchSide || im.height() < kPatchSide)
            throw StageError("ingest", im.id(), "images must be at least 48x48", true);
    }
    const bool external = config.saliency_source == SaliencySource::external;
    if (external && external_saliency.size() != images.size())
        throw StageError("saliency", "", "external saliency requires one map per image", true);

    CosegResult result;
    result.config = config;
    Diagnostics diagnostics;
    const std::size_t m_count = images.size();
    const int threads = config.threads;

    // 1. initial masks from saliency
    auto t0 = Clock::now();
    std::vector<BinaryMask> masks(m_count);
    per_image(images, threads, "saliency", diagnostics, [&](std::size_t m, Diagnostics& d) {
        SaliencyMap map;
        if (external) {
            if (!external_saliency[m].same_shape(images[m].width(), images[m].height()))
                throw InvalidInput("external saliency map does not match the image size");
            map = normalize_saliency(external_saliency[m]);
        } else {
            map = mbd_saliency(images[m], config.saliency_passes);
        }
        masks[m] = config.saliency_cut ? saliency_cut(images[m], map, config, &d)
                                       : threshold_saliency(map, config.saliency_factor);
    });
    result.timings.saliency = seconds_since(t0);

    // 2. patch graph, fixed for the whole run
    t0 = Clock::now();
    const bool transfer = config.transfer_enabled && m_count >= 2;
    PatchGraph graph;
    if (transfer) graph = run_stage("patch-graph", [&] { return build_patch_graph(images, config, &diagnostics); });
    result.transfer_active = transfer;
    result.patch_count = graph.patches.size();
    result.timings.patch_graph = seconds_since(t0);

    // 3-4. alternate soft-label diffusion and graph cuts
    t0 = Clock::now();
    std::vector<PairwiseField> pairwise(m_count);
    per_image(images, threads, "pairwise", diagnostics,
              [&](std::size_t m, Diagnostics&) { pairwise[m] = pairwise_costs(images[m], config.pairwise_gamma); });

    result.images.resize(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        result.images[m].image_id = images[m].id();
        result.images[m].initial_mask = masks[m];
    }

    std::vector<SoftMask> zbars(m_count);
    for (int iter = 0; iter < config.outer_iterations; ++iter) {
        const std::vector<ColorModelPair> models =
            run_stage("color-models", [&] { return fit_color_models(images, masks, config, iter, &diagnostics); });

        std::vector<UnaryField> unary(m_count);
        per_image(images, threads, "unary", diagnostics, [&](std::size_t m, Diagnostics&) {
            unary[m] = unary_costs(images[m], models[m].fg, models[m].bg);
        });

        PatchLabels z;
        std::vector<CoverageMap> covers(m_count);
        if (transfer) {
            std::vector<SoftMask> fields;
            fields.reserve(m_count);
            for (const BinaryMask& mask : masks) fields.push_back(to_soft(mask));
            const PatchLabels y = extract_labels(fields, graph.patches);
            DiffusionResult diffused =
                run_stage("diffusion", [&] { return run_diffusion(y, graph.weights, config, graph.patches, images); });
            result.diffusion_sweeps.push_back(diffused.sweeps);
            z = std::move(diffused.z);
            for (std::size_t m = 0; m < m_count; ++m) {
                Backprojection bp = backproject(z, graph.patches, m, images[m].width(), images[m].height());
                zbars[m] = std::move(bp.zbar);
                covers[m] = std::move(bp.cover);
            }
        } else {
            result.diffusion_sweeps.push_back(0);
        }

        std::vector<BinaryMask> next(m_count);
        per_image(images, threads, "graph-cut", diagnostics, [&](std::size_t m, Diagnostics& d) {
            next[m] = transfer ? segment_with_transfer(unary[m], pairwise[m], zbars[m], covers[m], config.lambda)
                               : graph_cut(unary[m], pairwise[m]);
            if (count_foreground(next[m]) == 0) {
                d.warn("iteration " + std::to_string(iter + 1) + ": empty foreground for '" + images[m].id() +
                       "', previous mask retained");
                next[m] = masks[m];
            }
        });
        masks = std::move(next);

        const EnergyTerms terms = run_stage("energy", [&] {
            if (transfer) return energy(images, masks, z, models, pairwise, graph.patches, graph.weights, config);
            return energy(images, masks, PatchLabels{}, models, pairwise, {}, WeightedPatchGraph{}, config);
        });
        result.energy_trace.push_back(terms.total());
        for (std::size_t m = 0; m < m_count; ++m) result.images[m].energy_trace.push_back(terms.per_image[m]);
    }
    result.timings.optimization = seconds_since(t0);

    for (std::size_t m = 0; m < m_count; ++m) {
        result.images[m].mask = masks[m];
        result.images[m].zbar = transfer ? zbars[m] : to_soft(masks[m]);
    }
    result.warnings = std::move(diagnostics.warnings);
    return result;
}

}  // namespace lstcoseg
