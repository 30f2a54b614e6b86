// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lstcoseg/diffusion.hpp"
#include "lstcoseg/eval.hpp"
#include "lstcoseg/lle.hpp"
#include "lstcoseg/mrf.hpp"
#include "lstcoseg/orchestrator.hpp"
#include "lstcoseg/patches.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace lstcoseg;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string format(const char* fmt, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

// Random 3x3 MRF with unaries that may be negative and arbitrary pairwise weights.
struct TinyMrf {
    UnaryField unary;
    PairwiseField pairwise;
};

TinyMrf random_tiny_mrf(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> cost(-2.0, 3.0);
    std::uniform_real_distribution<double> weight(0.0, 2.0);
    TinyMrf m;
    m.unary.width = m.unary.height = 3;
    m.unary.cost_bg.resize(9);
    m.unary.cost_fg.resize(9);
    for (int i = 0; i < 9; ++i) {
        m.unary.cost_bg[i] = cost(rng);
        m.unary.cost_fg[i] = cost(rng);
    }
    PairwiseField& p = m.pairwise;
    p.width = p.height = 3;
    p.right.assign(9, 0.0);
    p.down.assign(9, 0.0);
    p.down_right.assign(9, 0.0);
    p.down_left.assign(9, 0.0);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            const int i = y * 3 + x;
            if (x + 1 < 3) p.right[i] = weight(rng);
            if (y + 1 < 3) p.down[i] = weight(rng);
            if (x + 1 < 3 && y + 1 < 3) p.down_right[i] = weight(rng);
            if (x > 0 && y + 1 < 3) p.down_left[i] = weight(rng);
        }
    return m;
}

bool near_min(double got, double best) { return got <= best + 1e-12 * std::max(1.0, std::abs(best)); }

Outcome lle_optimality()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss;
    double worst_gap = -1e300;
    double worst_sum = 0.0;
    double worst_neg = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> target(16);
        for (double& v : target) v = gauss(rng);
        std::vector<std::vector<double>> nbrs(5, std::vector<double>(16));
        for (auto& n : nbrs)
            for (double& v : n) v = gauss(rng);
        std::vector<std::span<const double>> views(nbrs.begin(), nbrs.end());
        const SimplexSolution sol = solve_simplex_lsq(target, views);
        const oracle::GridOptimum grid = oracle::simplex_grid_search(target, nbrs, 0.02);
        worst_gap = std::max(worst_gap, sol.objective - grid.objective);
        double sum = 0.0;
        for (double w : sol.weights) {
            sum += w;
            worst_neg = std::min(worst_neg, w);
        }
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
    const double t = seconds_since(t0);
    const bool ok = worst_gap <= 1e-6 && worst_sum <= 1e-9 && worst_neg >= -1e-9 && t < 5.0;
    return {ok, format("max(solver - grid) = %.3g, |sum-1| <= %.2g, min w = %.2g, %.2f s", worst_gap, worst_sum,
                       worst_neg, t)};
}

Outcome graph_cut_exactness()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(12);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const TinyMrf m = random_tiny_mrf(rng);
        const BinaryMask cut = graph_cut(m.unary, m.pairwise);
        const auto best = oracle::exhaustive_minimum(
            9, [&](std::span<const std::uint8_t> l) { return oracle::mrf_energy(m.unary, m.pairwise, l); });
        if (!near_min(oracle::mrf_energy(m.unary, m.pairwise, cut.data), best.energy)) ++mismatches;
    }
    const double t = seconds_since(t0);
    return {mismatches == 0 && t < 5.0, format("%d/200 instances off the exhaustive minimum, %.2f s", mismatches, t)};
}

// The per-image objective keeps every patch term in its quadratic form: each
// patch contributes sum over its pixels of (x_p - u(p))^2, where u is that
// patch's label for the pixel. The linearized solver only sees the
// aggregated zbar and cover.
Outcome transfer_linearization()
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> coord(0, 2);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const TinyMrf m = random_tiny_mrf(rng);
        const double lambda = 0.1 + unit(rng);

        struct Contribution {
            int pixel;
            double value;
        };
        std::vector<std::vector<Contribution>> patches(6);
        for (auto& patch : patches) {
            const int x0 = coord(rng), y0 = coord(rng);
            const int x1 = std::min(2, x0 + coord(rng)), y1 = std::min(2, y0 + coord(rng));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) patch.push_back({y * 3 + x, unit(rng)});
        }

        CoverageMap cover(3, 3, 0);
        SoftMask zbar(3, 3, 0.5);
        std::vector<double> sum(9, 0.0);
        for (const auto& patch : patches)
            for (const Contribution& c : patch) {
                ++cover.data[c.pixel];
                sum[c.pixel] += c.value;
            }
        for (int i = 0; i < 9; ++i)
            if (cover.data[i] > 0) zbar.data[i] = sum[i] / cover.data[i];

        auto full = [&](std::span<const std::uint8_t> l) {
            double e = oracle::mrf_energy(m.unary, m.pairwise, l);
            for (const auto& patch : patches)
                for (const Contribution& c : patch) {
                    const double d = l[c.pixel] - c.value;
                    e += lambda * d * d;
                }
            return e;
        };
        const BinaryMask got = segment_with_transfer(m.unary, m.pairwise, zbar, cover, lambda);
        const auto best = oracle::exhaustive_minimum(9, full);
        if (!near_min(full(got.data), best.energy)) ++mismatches;
    }
    return {mismatches == 0, format("%d/100 trials off the exhaustive minimum of the full objective", mismatches)};
}

WeightedPatchGraph graph_from_rows(std::vector<std::vector<WeightedEdge>> rows)
{
    WeightedPatchGraph g;
    g.rows = std::move(rows);
    g.rebuild_incoming();
    return g;
}

Outcome diffusion_correctness()
{
    std::string detail;
    bool ok = true;

    // Two patches, each the other's only neighbor.
    PatchLabels y(2, 1);
    y.row(0)[0] = 1.0;
    const WeightedPatchGraph pair = graph_from_rows({{{1, 1.0}}, {{0, 1.0}}});
    const DiffusionResult two = iterate_diffusion(y, pair, 1.0, 0.3, 1e-12, 10000);
    const auto fixed = oracle::solve_linear({{4.6, -4.0}, {-4.0, 4.6}}, {0.6, 0.0});
    const double err = std::max(std::abs(two.z.row(0)[0] - fixed[0]), std::abs(two.z.row(1)[0] - fixed[1]));
    ok = ok && err <= 1e-4;
    detail += format("two-patch error %.2g; ", err);

    // alpha = 0 leaves Y untouched.
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n = 30, len = 16;
    auto random_graph = [&] {
        std::vector<std::vector<WeightedEdge>> rows(n);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);
        for (std::size_t i = 0; i < n; ++i) {
            const int k = static_cast<int>(unit(rng) * 4);
            std::vector<int> used;
            for (int e = 0; e < k; ++e) {
                const int j = pick(rng);
                if (j == static_cast<int>(i) || std::find(used.begin(), used.end(), j) != used.end()) continue;
                used.push_back(j);
            }
            std::vector<double> raw(used.size());
            for (double& v : raw) v = unit(rng) + 0.01;
            const double s = [&] { double t = 0; for (double v : raw) t += v; return t; }();
            std::sort(used.begin(), used.end());
            for (std::size_t e = 0; e < used.size(); ++e) rows[i].push_back({used[e], raw[e] / s});
        }
        return graph_from_rows(std::move(rows));
    };
    auto random_labels = [&] {
        PatchLabels z(n, len);
        for (double& v : z.values()) v = unit(rng) < 0.5 ? 0.0 : 1.0;
        return z;
    };
    const PatchLabels y0 = random_labels();
    const DiffusionResult still = iterate_diffusion(y0, random_graph(), 0.0, 0.3, 1e-6, 20);
    ok = ok && still.z == y0;
    detail += std::string("alpha=0 ") + (still.z == y0 ? "returns Y; " : "changes Y; ");

    int increases = 0;
    for (int g = 0; g < 20; ++g) {
        const WeightedPatchGraph graph = random_graph();
        const PatchLabels yy = random_labels();
        PatchLabels z = yy;
        double previous = diffusion_objective(z, yy, graph, 1.0, 0.3);
        for (int s = 0; s < 30; ++s) {
            z = diffusion_sweep(std::move(z), yy, graph, 1.0, 0.3);
            const double now = diffusion_objective(z, yy, graph, 1.0, 0.3);
            if (now > previous + 1e-12 * std::max(1.0, previous)) ++increases;
            previous = now;
        }
    }
    ok = ok && increases == 0;
    detail += format("%d objective increases over 20 graphs x 30 sweeps", increases);
    return {ok, detail};
}

// A target patch, one neighbor that shows the same content with the same
// mask, and two distractors with different content and masks.
Outcome lle_shape_transfer()
{
    auto block_with_disc = [](double cx, double cy, double r, Rgb fg, Rgb bg, std::vector<double>& mask) {
        PatchBlock block(kPatchPixels);
        mask.assign(kPatchPixels, 0.0);
        for (int y = 0; y < kPatchSide; ++y)
            for (int x = 0; x < kPatchSide; ++x) {
                const bool in = std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r;
                block[y * kPatchSide + x] = in ? fg : bg;
                mask[y * kPatchSide + x] = in ? 1.0 : 0.0;
            }
        return block;
    };
    auto block_with_bar = [](int x0, int x1, Rgb fg, Rgb bg, std::vector<double>& mask) {
        PatchBlock block(kPatchPixels);
        mask.assign(kPatchPixels, 0.0);
        for (int y = 0; y < kPatchSide; ++y)
            for (int x = 0; x < kPatchSide; ++x) {
                const bool in = x >= x0 && x < x1;
                block[y * kPatchSide + x] = in ? fg : bg;
                mask[y * kPatchSide + x] = in ? 1.0 : 0.0;
            }
        return block;
    };

    const Rgb gold{0.9, 0.7, 0.1}, navy{0.1, 0.1, 0.4}, grey{0.5, 0.5, 0.5};
    std::vector<double> truth, m_match, m_bar, m_corner;
    const PatchBlock target = block_with_disc(24, 24, 14, gold, navy, truth);
    const PatchBlock match = block_with_disc(24, 24, 14, gold, grey, m_match);
    const PatchBlock bar = block_with_bar(0, 16, gold, navy, m_bar);
    const PatchBlock corner = block_with_disc(48, 48, 30, gold, navy, m_corner);

    const std::vector<double> h_target = hog_descriptor(target);
    const std::vector<std::vector<double>> h_nbrs{hog_descriptor(match), hog_descriptor(bar), hog_descriptor(corner)};
    std::vector<std::span<const double>> views(h_nbrs.begin(), h_nbrs.end());
    const SimplexSolution sol = solve_simplex_lsq(h_target, views);

    const std::vector<const std::vector<double>*> masks{&m_match, &m_bar, &m_corner};
    double err_lle = 0.0, err_mean = 0.0;
    for (int p = 0; p < kPatchPixels; ++p) {
        double lle = 0.0, mean = 0.0;
        for (std::size_t j = 0; j < masks.size(); ++j) {
            lle += sol.weights[j] * (*masks[j])[p];
            mean += (*masks[j])[p] / static_cast<double>(masks.size());
        }
        err_lle += (lle - truth[p]) * (lle - truth[p]);
        err_mean += (mean - truth[p]) * (mean - truth[p]);
    }
    err_lle = std::sqrt(err_lle);
    err_mean = std::sqrt(err_mean);
    return {err_lle < err_mean, format("weights (%.3f, %.3f, %.3f), L2 error weighted %.3f vs average %.3f",
                                       sol.weights[0], sol.weights[1], sol.weights[2], err_lle, err_mean)};
}

struct RunScore {
    double mean_iou = 0.0;
    CosegResult result;
};

RunScore run_and_score(const synth::SyntheticSet& set, const CosegConfig& config)
{
    RunScore s;
    s.result = cosegment(set.images, config);
    std::vector<EvalRecord> records;
    for (std::size_t m = 0; m < set.images.size(); ++m) records.push_back(score(s.result.images[m].mask, set.truth[m]));
    s.mean_iou = aggregate(records).mean_iou;
    return s;
}

Outcome end_to_end(RunScore& full_out)
{
    const synth::SyntheticSet set = synth::make_disc_set({});
    CosegConfig base;
    full_out = run_and_score(set, base);
    CosegConfig plain = base;
    plain.transfer_enabled = false;
    const RunScore without = run_and_score(set, plain);
    const bool ok = full_out.mean_iou >= 0.90 && full_out.mean_iou - without.mean_iou >= 0.05;
    return {ok, format("mean IOU %.4f with transfer, %.4f without", full_out.mean_iou, without.mean_iou)};
}

Outcome multi_scale()
{
    synth::DiscSetOptions options;
    options.width = 240;
    options.height = 180;
    options.radii = {28, 56, 28, 56, 28};
    const synth::SyntheticSet set = synth::make_disc_set(options);
    CosegConfig multi;
    CosegConfig single = multi;
    single.scales = {48};
    const double m = run_and_score(set, multi).mean_iou;
    const double s = run_and_score(set, single).mean_iou;
    return {m >= s, format("mean IOU multi-scale %.4f, single-scale %.4f", m, s)};
}

Outcome runtime_envelope()
{
    synth::DiscSetOptions options;
    options.width = 300;
    options.height = 200;
    options.radii.clear();
    for (int i = 0; i < 30; ++i) options.radii.push_back(35 + (i % 4) * 8);
    options.seed = 21;
    const synth::SyntheticSet set = synth::make_disc_set(options);
    const auto t0 = std::chrono::steady_clock::now();
    const RunScore r = run_and_score(set, CosegConfig{});
    const double t = seconds_since(t0);
    return {t <= 900.0, format("30 images at 300x200, %zu patches, %.1f s (mean IOU %.3f)", r.result.patch_count, t,
                               r.mean_iou)};
}

Outcome determinism(const RunScore& first)
{
    const synth::SyntheticSet set = synth::make_disc_set({});
    CosegConfig config;
    const RunScore again = run_and_score(set, config);
    CosegConfig serial = config;
    serial.threads = 1;
    const RunScore one_thread = run_and_score(set, serial);
    if (first.result.images.size() != set.images.size()) return {false, "reference run missing"};
    int differing = 0;
    for (std::size_t m = 0; m < set.images.size(); ++m) {
        if (first.result.images[m].mask.data != again.result.images[m].mask.data) ++differing;
        if (first.result.images[m].mask.data != one_thread.result.images[m].mask.data) ++differing;
    }
    return {differing == 0, format("%d differing masks across 3 runs of 5 images", differing)};
}

Outcome metric_fixtures()
{
    auto mask2 = [](std::initializer_list<std::uint8_t> v) {
        BinaryMask m(2, 2);
        std::copy(v.begin(), v.end(), m.data.begin());
        return m;
    };
    const BinaryMask gt = mask2({1, 0, 1, 0});
    const EvalRecord same = score(gt, gt);
    const EvalRecord flipped = score(mask2({0, 1, 0, 1}), gt);
    const EvalRecord mixed = score(mask2({1, 1, 0, 0}), gt);
    EvalRecord a, b;
    a.iou = 0.2;
    b.iou = 0.4;
    const std::vector<EvalRecord> pair{a, b};
    const std::vector<EvalRecord> single{mixed};
    const bool ok = same.acc == 1.0 && same.iou == 1.0 && flipped.acc == 0.0 && flipped.iou == 0.0 &&
                    mixed.tp == 1 && mixed.fp == 1 && mixed.fn == 1 && mixed.tn == 1 && mixed.acc == 0.5 &&
                    mixed.iou == 1.0 / 3.0 && std::abs(aggregate(pair).mean_iou - 0.3) < 1e-15 && aggregate(single).mean_iou == mixed.iou &&
                    aggregate(single).mean_acc == mixed.acc;
    return {ok, format("identity (%.0f, %.0f), complement (%.0f, %.0f), top row vs left column (%.2f, %.6f)", same.acc,
                       same.iou, flipped.acc, flipped.iou, mixed.acc, mixed.iou)};
}

}  // namespace

int main()
{
    int failures = 0;
    auto report = [&](const char* name, const Outcome& o) {
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    };
    auto guarded = [&](const char* name, const std::function<Outcome()>& check) {
        try {
            report(name, check());
        } catch (const std::exception& e) {
            report(name, {false, std::string("exception: ") + e.what()});
        }
    };

    guarded("lle-optimality", lle_optimality);
    guarded("graph-cut-exactness", graph_cut_exactness);
    guarded("transfer-linearization", transfer_linearization);
    guarded("diffusion-correctness", diffusion_correctness);
    guarded("lle-shape-transfer", lle_shape_transfer);
    RunScore first;
    guarded("end-to-end-synthetic", [&] { return end_to_end(first); });
    guarded("multi-scale", multi_scale);
    guarded("runtime-envelope", runtime_envelope);
    guarded("determinism", [&] { return determinism(first); });
    guarded("metric-fixtures", metric_fixtures);
    return failures == 0 ? 0 : 1;
}
