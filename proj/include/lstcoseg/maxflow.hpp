#pragma once

#include <cstdint>
#include <deque>
#include <vector>

namespace lstcoseg {

/// Augmenting-path max-flow with two search trees grown from the terminals
/// and reused between augmentations (Boykov-Kolmogorov). Tuned for the
/// sparse, short-path graphs produced by pixel grids.
class MaxFlowGraph {
public:
    explicit MaxFlowGraph(int node_count, int edge_hint = 0);

    /// Adds cap_source to the source->node link and cap_sink to node->sink.
    /// Only the difference matters for the cut; the common part is
    /// accumulated as constant flow.
    void add_terminal(int node, double cap_source, double cap_sink);

    /// Adds the pair of directed arcs i->j (cap) and j->i (rev_cap).
    void add_edge(int i, int j, double cap, double rev_cap);

    double solve();

    /// True when the node ended on the source side of the minimum cut.
    /// Nodes in neither search tree are reported on the sink side.
    [[nodiscard]] bool in_source_set(int node) const;

    [[nodiscard]] int node_count() const noexcept { return static_cast<int>(nodes_.size()); }

private:
    static constexpr int kNone = -1;
    static constexpr int kTerminal = -2;
    static constexpr int kOrphan = -3;

    struct Node {
        int first = kNone;     // first outgoing arc
        int parent = kNone;    // arc to parent, or kNone/kTerminal/kOrphan
        bool is_sink = false;
        bool active = false;
        double tr_cap = 0.0;   // >0: residual from source, <0: residual to sink
        std::int64_t ts = 0;
        int dist = 0;
    };
    struct Arc {
        int head = 0;
        int next = kNone;
        double r_cap = 0.0;
    };

    static constexpr int sister(int a) noexcept { return a ^ 1; }

    void set_active(int i);
    int next_active();
    void augment(int middle);
    void process_source_orphan(int i);
    void process_sink_orphan(int i);

    std::vector<Node> nodes_;
    std::vector<Arc> arcs_;
    std::deque<int> active_;
    std::deque<int> orphans_;
    std::int64_t time_ = 0;
    double flow_ = 0.0;
    bool solved_ = false;
};

}  // namespace lstcoseg
