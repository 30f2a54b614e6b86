#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "lstcoseg/mrf.hpp"

namespace lstcoseg {

namespace {

constexpr int kMaxEmIterations = 100;
constexpr double kEmTolerance = 1e-5;

double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Eigen::Vector3d vec(const Rgb& c) { return {c.r, c.g, c.b}; }

double log_sum_exp(std::span<const double> v)
{
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

std::vector<Eigen::Vector3d> kmeanspp_centers(std::span<const Rgb> pixels, int k, std::mt19937_64& rng)
{
    const std::size_t n = pixels.size();
    std::vector<Eigen::Vector3d> centers;
    centers.push_back(vec(pixels[std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)))]));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (vec(pixels[i]) - centers.back()).squaredNorm());
            total += d2[i];
        }
        if (!(total > 0.0)) break;  // every pixel coincides with a center
        double target = uniform01(rng) * total;
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            pick = i;
            target -= d2[i];
            if (target < 0.0) break;
        }
        centers.push_back(vec(pixels[pick]));
    }
    return centers;
}

constexpr std::size_t kMaxTerms = 64;

// Per-component constants for fast evaluation of log(w) + log N(x).
struct ComponentTerms {
    double offset = 0.0;
    double mr = 0.0, mg = 0.0, mb = 0.0;
    double prr = 0.0, pgg = 0.0, pbb = 0.0, prg = 0.0, prb = 0.0, pgb = 0.0;

    ComponentTerms() = default;
    explicit ComponentTerms(const GaussianComponent& g)
        : offset((g.weight > 0.0 ? std::log(g.weight) : -std::numeric_limits<double>::infinity()) + g.log_norm),
          mr(g.mean[0]), mg(g.mean[1]), mb(g.mean[2]),
          prr(g.precision(0, 0)), pgg(g.precision(1, 1)), pbb(g.precision(2, 2)),
          prg(g.precision(0, 1)), prb(g.precision(0, 2)), pgb(g.precision(1, 2))
    {
    }

    [[nodiscard]] double log_weighted_density(const Rgb& c) const noexcept
    {
        const double dr = c.r - mr;
        const double dg = c.g - mg;
        const double db = c.b - mb;
        const double q = prr * dr * dr + pgg * dg * dg + pbb * db * db + 2.0 * (prg * dr * dg + prb * dr * db + pgb * dg * db);
        return offset - 0.5 * q;
    }
};

// Responsibility-weighted sufficient statistics of one component.
struct Moments {
    double n = 0.0;
    double sr = 0.0, sg = 0.0, sb = 0.0;
    double srr = 0.0, sgg = 0.0, sbb = 0.0, srg = 0.0, srb = 0.0, sgb = 0.0;

    void add(const Rgb& c, double r) noexcept
    {
        n += r;
        const double wr = r * c.r;
        const double wg = r * c.g;
        const double wb = r * c.b;
        sr += wr;
        sg += wg;
        sb += wb;
        srr += wr * c.r;
        sgg += wg * c.g;
        sbb += wb * c.b;
        srg += wr * c.g;
        srb += wr * c.b;
        sgb += wg * c.b;
    }

    [[nodiscard]] GaussianComponent component(double total) const
    {
        GaussianComponent g;
        g.weight = n / total;
        g.mean = Eigen::Vector3d(sr, sg, sb) / n;
        Eigen::Matrix3d s;
        s << srr, srg, srb, srg, sgg, sgb, srb, sgb, sbb;
        g.covariance = s / n - g.mean * g.mean.transpose();
        return g;
    }
};

}  // namespace

ColorModel::ColorModel(std::vector<GaussianComponent> components) : components_(std::move(components))
{
    if (components_.empty()) throw InvalidInput("color model needs at least one component");
    double total = 0.0;
    for (GaussianComponent& c : components_) {
        if (!(c.weight >= 0.0)) throw InvalidInput("negative mixture weight");
        total += c.weight;
        finalize(c);
    }
    if (!(total > 0.0)) throw InvalidInput("mixture weights sum to zero");
    for (GaussianComponent& c : components_) c.weight /= total;
}

void ColorModel::finalize(GaussianComponent& component)
{
    const Eigen::Matrix3d sym = 0.5 * (component.covariance + component.covariance.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(sym);
    Eigen::Vector3d values = eig.eigenvalues().cwiseMax(kCovarianceFloor);
    const Eigen::Matrix3d& vectors = eig.eigenvectors();
    component.covariance = vectors * values.asDiagonal() * vectors.transpose();
    component.precision = vectors * values.cwiseInverse().asDiagonal() * vectors.transpose();
    component.log_norm = -1.5 * std::log(2.0 * std::numbers::pi) - 0.5 * values.array().log().sum();
}

double ColorModel::log_density(const Rgb& c) const noexcept
{
    const Eigen::Vector3d x = vec(c);
    std::array<double, 64> small{};
    std::vector<double> large;
    std::span<double> terms;
    if (components_.size() <= small.size()) {
        terms = std::span<double>(small.data(), components_.size());
    } else {
        large.resize(components_.size());
        terms = large;
    }
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const GaussianComponent& g = components_[k];
        const Eigen::Vector3d d = x - g.mean;
        terms[k] = (g.weight > 0.0 ? std::log(g.weight) : -std::numeric_limits<double>::infinity()) + g.log_norm -
                   0.5 * d.dot(g.precision * d);
    }
    return log_sum_exp(terms);
}

double ColorModel::density(const Rgb& c) const noexcept { return std::exp(log_density(c)); }

GmmFit fit_gmm(std::span<const Rgb> pixels, int components, std::uint64_t seed, Diagnostics* diagnostics)
{
    if (components < 1) throw InvalidInput("GMM needs at least one component");
    if (pixels.empty()) throw InvalidInput("cannot fit a color model to zero pixels");
    if (static_cast<std::size_t>(components) > pixels.size()) {
        if (diagnostics) {
            diagnostics->warn("GMM components reduced from " + std::to_string(components) + " to " +
                              std::to_string(pixels.size()) + " (too few pixels)");
        }
        components = static_cast<int>(pixels.size());
    }

    std::mt19937_64 rng(seed);
    const std::vector<Eigen::Vector3d> centers = kmeanspp_centers(pixels, components, rng);
    const std::size_t n = pixels.size();
    const std::size_t k0 = centers.size();

    // hard assignment to the nearest center gives the starting mixture
    std::vector<GaussianComponent> comps(k0);
    std::vector<double> counts(k0, 0.0);
    std::vector<Eigen::Vector3d> sums(k0, Eigen::Vector3d::Zero());
    std::vector<Eigen::Matrix3d> outer(k0, Eigen::Matrix3d::Zero());
    for (const Rgb& p : pixels) {
        const Eigen::Vector3d x = vec(p);
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < k0; ++k) {
            const double d = (x - centers[k]).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        counts[best] += 1.0;
        sums[best] += x;
        outer[best] += x * x.transpose();
    }
    std::vector<GaussianComponent> init;
    for (std::size_t k = 0; k < k0; ++k) {
        if (counts[k] <= 0.0) continue;
        GaussianComponent g;
        g.weight = counts[k] / static_cast<double>(n);
        g.mean = sums[k] / counts[k];
        g.covariance = outer[k] / counts[k] - g.mean * g.mean.transpose();
        init.push_back(g);
    }

    GmmFit fit;
    fit.model = ColorModel(std::move(init));

    // Each E-step also yields the mean log-likelihood of the model it uses,
    // so the trace entry for model t comes from the pass that builds model t+1.
    double previous_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0;; ++iter) {
        const std::span<const GaussianComponent> cur = fit.model.components();
        const std::size_t kc = cur.size();
        std::vector<ComponentTerms> terms(kc);
        for (std::size_t k = 0; k < kc; ++k) terms[k] = ComponentTerms(cur[k]);
        std::vector<Moments> moments(kc);
        std::array<double, kMaxTerms> logp{};
        std::vector<double> big;
        std::span<double> lp = kc <= kMaxTerms ? std::span<double>(logp.data(), kc) : (big.resize(kc), std::span<double>(big));
        double ll_sum = 0.0;
        for (const Rgb& p : pixels) {
            for (std::size_t k = 0; k < kc; ++k) lp[k] = terms[k].log_weighted_density(p);
            const double lse = log_sum_exp(lp);
            ll_sum += lse;
            for (std::size_t k = 0; k < kc; ++k) moments[k].add(p, std::exp(lp[k] - lse));
        }
        const double ll = ll_sum / static_cast<double>(n);
        fit.log_likelihood_trace.push_back(ll);
        if (ll - previous_ll < kEmTolerance || iter == kMaxEmIterations) break;
        previous_ll = ll;

        std::vector<GaussianComponent> next;
        for (std::size_t k = 0; k < kc; ++k) {
            if (moments[k].n < 1e-10) continue;  // vanished component
            next.push_back(moments[k].component(static_cast<double>(n)));
        }
        fit.model = ColorModel(std::move(next));
        fit.iterations = iter + 1;
    }
    return fit;
}

std::vector<Rgb> subsample(std::span<const Rgb> pixels, std::size_t max_count, std::uint64_t seed)
{
    if (pixels.size() <= max_count) return {pixels.begin(), pixels.end()};
    std::vector<std::size_t> idx(pixels.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < max_count; ++i) {
        const std::size_t span = idx.size() - i;
        const std::size_t j = i + std::min(span - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(span)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(max_count);
    std::sort(idx.begin(), idx.end());
    std::vector<Rgb> out;
    out.reserve(max_count);
    for (std::size_t i : idx) out.push_back(pixels[i]);
    return out;
}

}  // namespace lstcoseg
