#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "lstcoseg/maxflow.hpp"
#include "lstcoseg/mrf.hpp"
#include "oracles.hpp"

using namespace lstcoseg;

namespace {

Image random_image(std::mt19937& rng, int w, int h)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image im("r", w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) im.at(x, y) = {u(rng), u(rng), u(rng)};
    return im;
}

UnaryField random_unary(std::mt19937& rng, int w, int h, double scale = 5.0)
{
    std::uniform_real_distribution<double> u(0.0, scale);
    UnaryField f{w, h, std::vector<double>(w * h), std::vector<double>(w * h)};
    for (int i = 0; i < w * h; ++i) {
        f.cost_bg[i] = u(rng);
        f.cost_fg[i] = u(rng);
    }
    return f;
}

double direct_density(const ColorModel& m, const Rgb& c)
{
    const Eigen::Vector3d x(c.r, c.g, c.b);
    double p = 0.0;
    for (const GaussianComponent& g : m.components()) {
        const Eigen::Vector3d d = x - g.mean;
        const double q = d.dot(g.covariance.inverse() * d);
        p += g.weight * std::exp(-0.5 * q) / std::sqrt(std::pow(2 * std::numbers::pi, 3) * g.covariance.determinant());
    }
    return p;
}

}  // namespace

TEST(Gmm, SingleColor)
{
    const std::vector<Rgb> px(50, Rgb{0.2, 0.4, 0.6});
    const GmmFit fit = fit_gmm(px, 1, 0);
    ASSERT_EQ(fit.model.size(), 1);
    const GaussianComponent& g = fit.model.components()[0];
    EXPECT_NEAR(g.mean[0], 0.2, 1e-12);
    EXPECT_NEAR(g.mean[1], 0.4, 1e-12);
    EXPECT_NEAR(g.mean[2], 0.6, 1e-12);
    EXPECT_TRUE(g.covariance.isApprox(Eigen::Matrix3d::Identity() * ColorModel::kCovarianceFloor, 1e-9));
    EXPECT_EQ(g.weight, 1.0);
}

TEST(Gmm, TwoClusters)
{
    std::mt19937 rng(3);
    std::normal_distribution<double> n(0.0, 0.02);
    std::vector<Rgb> px;
    for (int i = 0; i < 300; ++i) px.push_back({1 + n(rng), n(rng), n(rng)});
    for (int i = 0; i < 700; ++i) px.push_back({n(rng), n(rng), 1 + n(rng)});
    const GmmFit fit = fit_gmm(px, 2, 42);
    ASSERT_EQ(fit.model.size(), 2);
    for (const GaussianComponent& g : fit.model.components()) {
        const bool red = g.mean[0] > 0.5;
        EXPECT_NEAR(g.mean[0], red ? 1.0 : 0.0, 0.05);
        EXPECT_NEAR(g.mean[2], red ? 0.0 : 1.0, 0.05);
        EXPECT_NEAR(g.weight, red ? 0.3 : 0.7, 0.05);
    }
}

TEST(Gmm, LogLikelihoodNonDecreasing)
{
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        std::vector<Rgb> px;
        for (int i = 0; i < 400; ++i) px.push_back({u(rng), u(rng) * u(rng), u(rng) > 0.5 ? 0.9 : 0.1});
        const GmmFit fit = fit_gmm(px, 5, t);
        ASSERT_GE(fit.log_likelihood_trace.size(), 2u);
        for (std::size_t i = 1; i < fit.log_likelihood_trace.size(); ++i)
            EXPECT_GE(fit.log_likelihood_trace[i], fit.log_likelihood_trace[i - 1] - 1e-10);
    }
}

TEST(Gmm, FewerPixelsThanComponents)
{
    const std::vector<Rgb> px{{0.1, 0.1, 0.1}, {0.9, 0.9, 0.9}, {0.5, 0.1, 0.3}};
    Diagnostics diag;
    const GmmFit fit = fit_gmm(px, 12, 0, &diag);
    EXPECT_LE(fit.model.size(), 3);
    EXPECT_EQ(diag.warnings.size(), 1u);
}

TEST(Gmm, SeededAndDeterministic)
{
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Rgb> px;
    for (int i = 0; i < 500; ++i) px.push_back({u(rng), u(rng), u(rng)});
    const GmmFit a = fit_gmm(px, 4, 9);
    const GmmFit b = fit_gmm(px, 4, 9);
    EXPECT_EQ(a.log_likelihood_trace, b.log_likelihood_trace);
}

TEST(Unary, DensityOrdering)
{
    GaussianComponent tight;
    tight.weight = 1;
    tight.mean = {1, 0, 0};
    tight.covariance = Eigen::Matrix3d::Identity() * 1e-3;
    GaussianComponent far = tight;
    far.mean = {0, 0, 1};
    const ColorModel fg({tight}), bg({far});
    Image im("u", 1, 1);
    im.at(0, 0) = {1, 0, 0};
    const UnaryField u = unary_costs(im, fg, bg);
    EXPECT_LT(u.cost_fg[0] + 10, u.cost_bg[0]);
    const UnaryField same = unary_costs(im, fg, fg);
    EXPECT_EQ(same.cost_fg, same.cost_bg);
}

TEST(Unary, MatchesDirectMixture)
{
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Rgb> px;
    for (int i = 0; i < 300; ++i) px.push_back({u(rng), u(rng), u(rng)});
    const ColorModel m = fit_gmm(px, 3, 1).model;
    for (int i = 0; i < 10; ++i) {
        const Rgb c{u(rng), u(rng), u(rng)};
        const double d = direct_density(m, c);
        EXPECT_NEAR(m.density(c), d, 1e-10 * d);
        Image im("p", 1, 1);
        im.at(0, 0) = c;
        EXPECT_NEAR(unary_costs(im, m, m).cost_fg[0], -std::log(std::max(d, 1e-12)), 1e-9);
    }
}

TEST(Pairwise, ConstantImage)
{
    Image im("c", 4, 3);
    const PairwiseField f = pairwise_costs(im, 50.0);
    EXPECT_EQ(f.beta, 0.0);
    EXPECT_EQ(f.right[0], 50.0);
    EXPECT_EQ(f.down[0], 50.0);
    EXPECT_NEAR(f.down_right[0], 50.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(f.down_left[1], 50.0 / std::sqrt(2.0), 1e-12);
    EXPECT_EQ(f.right[3], 0.0);   // no right neighbor on the last column
    EXPECT_EQ(f.down_left[0], 0.0);
}

TEST(Pairwise, EdgesAreCheaper)
{
    Image im("e", 6, 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 6; ++x) im.at(x, y) = x < 3 ? Rgb{0, 0, 0} : Rgb{1, 1, 1};
    const PairwiseField f = pairwise_costs(im, 50.0);
    EXPECT_LT(f.right[2], f.right[0]);
    EXPECT_LT(f.right[2], f.right[4]);
}

TEST(Pairwise, BetaTwoPass)
{
    std::mt19937 rng(7);
    const Image im = random_image(rng, 9, 7);
    double sum = 0.0;
    int count = 0;
    auto d2 = [&](int x0, int y0, int x1, int y1) {
        const Rgb a = im.at(x0, y0), b = im.at(x1, y1);
        return (a.r - b.r) * (a.r - b.r) + (a.g - b.g) * (a.g - b.g) + (a.b - b.b) * (a.b - b.b);
    };
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 9; ++x)
            for (auto [dx, dy] : {std::pair{1, 0}, {0, 1}, {1, 1}, {-1, 1}}) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= 9 || ny >= 7) continue;
                sum += d2(x, y, nx, ny);
                ++count;
            }
    const PairwiseField f = pairwise_costs(im, 50.0);
    EXPECT_NEAR(f.beta, 1.0 / (2.0 * sum / count), 1e-12);
    EXPECT_NEAR(f.down_right[0], 50.0 / std::sqrt(2.0) * std::exp(-f.beta * d2(0, 0, 1, 1)), 1e-12);
}

TEST(GraphCut, ZeroPairwiseIsPointwise)
{
    std::mt19937 rng(8);
    const UnaryField u = random_unary(rng, 7, 5);
    PairwiseField p{7, 5, 0.0, std::vector<double>(35), std::vector<double>(35), std::vector<double>(35),
                    std::vector<double>(35)};
    const BinaryMask m = graph_cut(u, p);
    for (int i = 0; i < 35; ++i) EXPECT_EQ(m.data[i], u.cost_fg[i] < u.cost_bg[i] ? 1 : 0);
}

TEST(GraphCut, MatchesExhaustiveOn3x3)
{
    std::mt19937 rng(9);
    for (int t = 0; t < 50; ++t) {
        const Image im = random_image(rng, 3, 3);
        const UnaryField u = random_unary(rng, 3, 3, 3.0);
        const PairwiseField p = pairwise_costs(im, 1.0 + t % 4);
        const BinaryMask m = graph_cut(u, p);
        const auto best = oracle::exhaustive_minimum(9, [&](auto l) { return oracle::mrf_energy(u, p, l); });
        EXPECT_EQ(oracle::mrf_energy(u, p, m.data), best.energy);
        EXPECT_LE(mrf_energy(u, p, m), mrf_energy(u, p, BinaryMask(3, 3, 0)));
        EXPECT_LE(mrf_energy(u, p, m), mrf_energy(u, p, BinaryMask(3, 3, 1)));
    }
}

TEST(GraphCut, StrongSmoothingGivesConstantLabel)
{
    std::mt19937 rng(10);
    const Image im = random_image(rng, 6, 6);
    const UnaryField u = random_unary(rng, 6, 6, 1.0);
    PairwiseField p = pairwise_costs(im, 1e4);
    p.beta = 0.0;
    for (auto* v : {&p.right, &p.down, &p.down_right, &p.down_left})
        for (double& x : *v)
            if (x > 0) x = 1e4;
    const BinaryMask m = graph_cut(u, p);
    double fg = 0, bg = 0;
    for (int i = 0; i < 36; ++i) {
        fg += u.cost_fg[i];
        bg += u.cost_bg[i];
    }
    EXPECT_EQ(count_foreground(m), fg < bg ? 36u : 0u);
}

TEST(GraphCut, NegativeCostsAreFine)
{
    std::mt19937 rng(11);
    for (int t = 0; t < 20; ++t) {
        const Image im = random_image(rng, 3, 3);
        UnaryField u = random_unary(rng, 3, 3, 4.0);
        for (double& c : u.cost_fg) c -= 2.0;
        const PairwiseField p = pairwise_costs(im, 1.5);
        const BinaryMask m = graph_cut(u, p);
        const auto best = oracle::exhaustive_minimum(9, [&](auto l) { return oracle::mrf_energy(u, p, l); });
        EXPECT_EQ(oracle::mrf_energy(u, p, m.data), best.energy);
    }
}

TEST(GraphCut, RejectsMismatch)
{
    std::mt19937 rng(12);
    const UnaryField u = random_unary(rng, 3, 3);
    const PairwiseField p = pairwise_costs(random_image(rng, 4, 3));
    EXPECT_THROW(graph_cut(u, p), InvalidInput);
}

TEST(MaxFlow, KnownFlowValue)
{
    // s->0 (3), s->1 (2), 0->1 (1), 0->t (2), 1->t (3): max flow 5
    MaxFlowGraph g(2);
    g.add_terminal(0, 3, 2);
    g.add_terminal(1, 2, 3);
    g.add_edge(0, 1, 1, 0);
    EXPECT_DOUBLE_EQ(g.solve(), 5.0);
}

TEST(MaxFlow, RandomGraphsAgainstMinCutEnumeration)
{
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int t = 0; t < 100; ++t) {
        const int n = 8;
        std::vector<double> cs(n), ct(n);
        std::vector<std::array<double, 4>> edges;
        MaxFlowGraph g(n);
        for (int i = 0; i < n; ++i) {
            cs[i] = u(rng);
            ct[i] = u(rng);
            g.add_terminal(i, cs[i], ct[i]);
        }
        for (int k = 0; k < 14; ++k) {
            const int i = rng() % n, j = rng() % n;
            if (i == j) continue;
            const double a = u(rng), b = u(rng);
            g.add_edge(i, j, a, b);
            edges.push_back({double(i), double(j), a, b});
        }
        const double flow = g.solve();
        double best = 1e300;
        for (int code = 0; code < (1 << n); ++code) {
            double c = 0;
            auto src = [&](int i) { return (code >> i) & 1; };
            for (int i = 0; i < n; ++i) c += src(i) ? ct[i] : cs[i];
            for (const auto& e : edges) {
                const int i = int(e[0]), j = int(e[1]);
                if (src(i) && !src(j)) c += e[2];
                if (src(j) && !src(i)) c += e[3];
            }
            best = std::min(best, c);
        }
        EXPECT_NEAR(flow, best, 1e-9);
        double cut = 0;
        for (int i = 0; i < n; ++i) cut += g.in_source_set(i) ? ct[i] : cs[i];
        for (const auto& e : edges) {
            const bool si = g.in_source_set(int(e[0])), sj = g.in_source_set(int(e[1]));
            if (si && !sj) cut += e[2];
            if (sj && !si) cut += e[3];
        }
        EXPECT_NEAR(cut, best, 1e-9);
    }
}

TEST(Transfer, NeutralLabelsChangeNothing)
{
    std::mt19937 rng(14);
    for (int t = 0; t < 20; ++t) {
        const Image im = random_image(rng, 5, 4);
        const UnaryField u = random_unary(rng, 5, 4);
        const PairwiseField p = pairwise_costs(im, 2.0);
        CoverageMap cover(5, 4, 3);
        EXPECT_EQ(segment_with_transfer(u, p, SoftMask(5, 4, 0.5), cover, 0.3), graph_cut(u, p));
        std::uniform_real_distribution<double> z(0.0, 1.0);
        SoftMask zbar(5, 4);
        for (double& v : zbar.data) v = z(rng);
        EXPECT_EQ(segment_with_transfer(u, p, zbar, cover, 0.0), graph_cut(u, p));
    }
}

TEST(Transfer, DominantBiasGivesForeground)
{
    std::mt19937 rng(15);
    const Image im = random_image(rng, 5, 5);
    const UnaryField u = random_unary(rng, 5, 5);
    const BinaryMask m = segment_with_transfer(u, pairwise_costs(im), SoftMask(5, 5, 1.0), CoverageMap(5, 5, 1), 1e6);
    EXPECT_EQ(count_foreground(m), 25u);
}

TEST(Transfer, RejectsMismatch)
{
    std::mt19937 rng(16);
    const UnaryField u = random_unary(rng, 3, 3);
    EXPECT_THROW(add_transfer_bias(u, SoftMask(3, 2, 0.5), CoverageMap(3, 3, 1), 0.3), InvalidInput);
}

TEST(Subsample, SortedSeededSubset)
{
    std::vector<Rgb> px;
    for (int i = 0; i < 100; ++i) px.push_back({i / 100.0, 0, 0});
    const auto a = subsample(px, 10, 4);
    EXPECT_EQ(a.size(), 10u);
    for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i - 1].r, a[i].r);
    const auto b = subsample(px, 10, 4);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
    EXPECT_EQ(subsample(px, 200, 4).size(), 100u);
}
