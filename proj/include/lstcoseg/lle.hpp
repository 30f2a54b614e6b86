#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "lstcoseg/matcher.hpp"

namespace lstcoseg {

struct SimplexSolution {
    std::vector<double> weights;
    double objective = 0.0;            // ||target - sum_j w_j x_j||^2, evaluated directly
    int iterations = 0;
    std::vector<double> trace;         // objective after each iteration (Gram form)
};

/// Minimizes ||target - sum_j w_j neighbors[j]||^2 over the probability
/// simplex by projected gradient with step 1/L, L bounded by the largest
/// Gram row sum. Starts from uniform weights and stops once the Frank-Wolfe
/// gap (an upper bound on the suboptimality) drops to `tol`.
SimplexSolution solve_simplex_lsq(std::span<const double> target, std::span<const std::span<const double>> neighbors,
                                  double tol = 1e-8, int max_iters = 500);

/// Euclidean projection onto {w >= 0, sum w = 1}.
std::vector<double> project_to_simplex(std::span<const double> v);

struct WeightedEdge {
    int patch = 0;
    double weight = 0.0;
};

/// Sparse reconstruction weights. rows[i] holds (j, w_ij) for j in N_i;
/// incoming[i] holds (j, w_ji) for every j with i in N_j, ordered by j.
struct WeightedPatchGraph {
    std::vector<std::vector<WeightedEdge>> rows;
    std::vector<std::vector<WeightedEdge>> incoming;

    [[nodiscard]] std::size_t patch_count() const noexcept { return rows.size(); }

    /// Rebuilds `incoming` from `rows`.
    void rebuild_incoming();
};

WeightedPatchGraph learn_graph_weights(std::span<const NeighborList> lists, std::span<const PatchDescriptor> descriptors,
                                       int threads = 0);

/// One "i j w" triple per edge.
void write_graph(std::ostream& out, const WeightedPatchGraph& graph);

}  // namespace lstcoseg
