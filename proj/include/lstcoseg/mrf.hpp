#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lstcoseg/core.hpp"

namespace lstcoseg {

struct GaussianComponent {
    double weight = 0.0;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
    // cached from covariance
    Eigen::Matrix3d precision = Eigen::Matrix3d::Identity();
    double log_norm = 0.0;  // log of the Gaussian normalizing constant
};

/// Gaussian mixture over RGB colors.
class ColorModel {
public:
    static constexpr double kCovarianceFloor = 1e-4;

    ColorModel() = default;
    explicit ColorModel(std::vector<GaussianComponent> components);

    [[nodiscard]] double density(const Rgb& c) const noexcept;
    [[nodiscard]] double log_density(const Rgb& c) const noexcept;
    [[nodiscard]] std::span<const GaussianComponent> components() const noexcept { return components_; }
    [[nodiscard]] int size() const noexcept { return static_cast<int>(components_.size()); }

    /// Symmetrizes the covariance, clips its eigenvalues at kCovarianceFloor
    /// and refreshes the cached precision and normalizer.
    static void finalize(GaussianComponent& component);

private:
    std::vector<GaussianComponent> components_;
};

struct GmmFit {
    ColorModel model;
    std::vector<double> log_likelihood_trace;  // mean per-point log-likelihood after each EM step
    int iterations = 0;
};

/// EM fit seeded by k-means++. Fewer distinct colors than `components`
/// yields fewer components; fewer pixels than `components` reduces the count
/// and records a warning.
GmmFit fit_gmm(std::span<const Rgb> pixels, int components, std::uint64_t seed, Diagnostics* diagnostics = nullptr);

/// Per-pixel negative log-likelihoods.
struct UnaryField {
    int width = 0;
    int height = 0;
    std::vector<double> cost_bg;
    std::vector<double> cost_fg;
};

UnaryField unary_costs(const Image& image, const ColorModel& fg, const ColorModel& bg);

/// Contrast-sensitive weights over the 8-neighborhood, stored per direction:
/// right (x+1,y), down (x,y+1), down_right (x+1,y+1), down_left (x-1,y+1),
/// indexed by the first pixel. Entries without a partner are 0.
struct PairwiseField {
    int width = 0;
    int height = 0;
    double beta = 0.0;
    std::vector<double> right;
    std::vector<double> down;
    std::vector<double> down_right;
    std::vector<double> down_left;
};

PairwiseField pairwise_costs(const Image& image, double gamma = 50.0);

/// Energy of a labeling: unary costs plus pairwise weights on cut edges.
double mrf_energy(const UnaryField& unary, const PairwiseField& pairwise, const BinaryMask& labels);

/// Exact minimizer of the binary MRF energy via minimum cut.
BinaryMask graph_cut(const UnaryField& unary, const PairwiseField& pairwise);

/// Adds lambda * cover * (1 - 2 zbar) to the foreground cost of each pixel.
UnaryField add_transfer_bias(const UnaryField& unary, const SoftMask& zbar, const CoverageMap& cover, double lambda);

BinaryMask segment_with_transfer(const UnaryField& unary, const PairwiseField& pairwise, const SoftMask& zbar,
                                 const CoverageMap& cover, double lambda);

/// Foreground and background pixels of an image, split by mask.
void split_by_mask(const Image& image, const BinaryMask& mask, std::vector<Rgb>& fg, std::vector<Rgb>& bg);

/// Seeded uniform subsample without replacement (order preserved).
std::vector<Rgb> subsample(std::span<const Rgb> pixels, std::size_t max_count, std::uint64_t seed);

}  // namespace lstcoseg
