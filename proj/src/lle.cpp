#include "lstcoseg/lle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include "lstcoseg/parallel.hpp"

namespace lstcoseg {

std::vector<double> project_to_simplex(std::span<const double> v)
{
    if (v.empty()) throw InvalidInput("cannot project an empty vector");
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumulative += u[j];
        const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    std::vector<double> w(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) w[j] = std::max(v[j] - theta, 0.0);
    return w;
}

SimplexSolution solve_simplex_lsq(std::span<const double> target, std::span<const std::span<const double>> neighbors,
                                  double tol, int max_iters)
{
    const std::size_t k = neighbors.size();
    if (k == 0) throw InvalidInput("simplex least squares needs at least one neighbor");
    const std::size_t dim = target.size();
    for (const auto& n : neighbors) {
        if (n.size() != dim) throw InvalidInput("neighbor and target dimensions differ");
    }

    std::vector<double> gram(k * k, 0.0);
    std::vector<double> lin(k, 0.0);
    double constant = 0.0;
    for (std::size_t d = 0; d < dim; ++d) constant += target[d] * target[d];
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t d = 0; d < dim; ++d) lin[a] += neighbors[a][d] * target[d];
        for (std::size_t b = a; b < k; ++b) {
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) s += neighbors[a][d] * neighbors[b][d];
            gram[a * k + b] = gram[b * k + a] = s;
        }
    }

    auto objective = [&](const std::vector<double>& w) {
        double q = 0.0;
        for (std::size_t a = 0; a < k; ++a) {
            double row = 0.0;
            for (std::size_t b = 0; b < k; ++b) row += gram[a * k + b] * w[b];
            q += w[a] * (row - 2.0 * lin[a]);
        }
        return q + constant;
    };

    double lipschitz = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < k; ++b) s += std::abs(gram[a * k + b]);
        lipschitz = std::max(lipschitz, 2.0 * s);
    }

    SimplexSolution sol;
    std::vector<double> w(k, 1.0 / static_cast<double>(k));
    std::vector<double> grad(k);
    std::vector<double> step(k);
    if (k > 1 && lipschitz > 0.0) {
        for (int it = 0; it < max_iters; ++it) {
            double gw = 0.0;
            double gmin = std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < k; ++a) {
                double row = 0.0;
                for (std::size_t b = 0; b < k; ++b) row += gram[a * k + b] * w[b];
                grad[a] = 2.0 * (row - lin[a]);
                gw += grad[a] * w[a];
                gmin = std::min(gmin, grad[a]);
            }
            if (gw - gmin <= tol) break;
            for (std::size_t a = 0; a < k; ++a) step[a] = w[a] - grad[a] / lipschitz;
            w = project_to_simplex(step);
            sol.trace.push_back(objective(w));
            sol.iterations = it + 1;
        }
    }

    double sum = 0.0;
    for (double& x : w) {
        x = std::max(x, 0.0);
        sum += x;
    }
    for (double& x : w) x /= sum;

    double residual = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        double r = target[d];
        for (std::size_t a = 0; a < k; ++a) r -= w[a] * neighbors[a][d];
        residual += r * r;
    }
    sol.weights = std::move(w);
    sol.objective = residual;
    return sol;
}

void WeightedPatchGraph::rebuild_incoming()
{
    incoming.assign(rows.size(), {});
    for (std::size_t j = 0; j < rows.size(); ++j) {
        for (const WeightedEdge& e : rows[j]) {
            if (e.patch < 0 || static_cast<std::size_t>(e.patch) >= rows.size()) throw InvalidInput("edge to a missing patch");
            if (static_cast<std::size_t>(e.patch) == j) throw InvalidInput("self edge in patch graph");
            incoming[static_cast<std::size_t>(e.patch)].push_back({static_cast<int>(j), e.weight});
        }
    }
}

WeightedPatchGraph learn_graph_weights(std::span<const NeighborList> lists, std::span<const PatchDescriptor> descriptors,
                                       int threads)
{
    if (lists.size() != descriptors.size()) throw InvalidInput("neighbor lists and descriptors differ in count");
    WeightedPatchGraph graph;
    graph.rows.resize(lists.size());
    parallel_for(lists.size(), threads, [&](std::size_t i) {
        const NeighborList& l = lists[i];
        if (l.patch_id != static_cast<int>(i) || descriptors[i].patch_id != static_cast<int>(i))
            throw InvalidInput("neighbor lists must be indexed by patch id");
        if (l.neighbors.empty()) return;
        std::vector<std::span<const double>> xs;
        for (int j : l.neighbors) {
            if (j < 0 || static_cast<std::size_t>(j) >= descriptors.size()) throw InvalidInput("neighbor id out of range");
            xs.emplace_back(descriptors[static_cast<std::size_t>(j)].hog);
        }
        const SimplexSolution sol = solve_simplex_lsq(descriptors[i].hog, xs);
        for (std::size_t a = 0; a < xs.size(); ++a) graph.rows[i].push_back({l.neighbors[a], sol.weights[a]});
    });
    graph.rebuild_incoming();
    return graph;
}

void write_graph(std::ostream& out, const WeightedPatchGraph& graph)
{
    for (std::size_t i = 0; i < graph.rows.size(); ++i) {
        for (const WeightedEdge& e : graph.rows[i]) out << i << ' ' << e.patch << ' ' << e.weight << '\n';
    }
}

}  // namespace lstcoseg
