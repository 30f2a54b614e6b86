#include "lstcoseg/maxflow.hpp"

#include <algorithm>
#include <limits>

#include "lstcoseg/core.hpp"

namespace lstcoseg {

MaxFlowGraph::MaxFlowGraph(int node_count, int edge_hint)
{
    if (node_count < 0) throw InvalidInput("negative node count");
    nodes_.resize(static_cast<std::size_t>(node_count));
    if (edge_hint > 0) arcs_.reserve(2 * static_cast<std::size_t>(edge_hint));
}

void MaxFlowGraph::add_terminal(int node, double cap_source, double cap_sink)
{
    Node& n = nodes_.at(static_cast<std::size_t>(node));
    const double delta = n.tr_cap;
    if (delta > 0) cap_source += delta;
    else cap_sink -= delta;
    flow_ += std::min(cap_source, cap_sink);
    n.tr_cap = cap_source - cap_sink;
}

void MaxFlowGraph::add_edge(int i, int j, double cap, double rev_cap)
{
    if (i == j) throw InvalidInput("self edge in flow graph");
    const int a = static_cast<int>(arcs_.size());
    arcs_.push_back({j, nodes_.at(static_cast<std::size_t>(i)).first, cap});
    arcs_.push_back({i, nodes_.at(static_cast<std::size_t>(j)).first, rev_cap});
    nodes_[static_cast<std::size_t>(i)].first = a;
    nodes_[static_cast<std::size_t>(j)].first = a + 1;
}

void MaxFlowGraph::set_active(int i)
{
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.active) {
        n.active = true;
        active_.push_back(i);
    }
}

int MaxFlowGraph::next_active()
{
    while (!active_.empty()) {
        const int i = active_.front();
        active_.pop_front();
        Node& n = nodes_[static_cast<std::size_t>(i)];
        n.active = false;
        if (n.parent != kNone) return i;
    }
    return kNone;
}

void MaxFlowGraph::augment(int middle)
{
    // middle runs from the source tree into the sink tree
    double bottleneck = arcs_[static_cast<std::size_t>(middle)].r_cap;

    int i = arcs_[static_cast<std::size_t>(sister(middle))].head;
    for (;;) {
        const int a = nodes_[static_cast<std::size_t>(i)].parent;
        if (a == kTerminal) break;
        bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(sister(a))].r_cap);
        i = arcs_[static_cast<std::size_t>(a)].head;
    }
    bottleneck = std::min(bottleneck, nodes_[static_cast<std::size_t>(i)].tr_cap);

    i = arcs_[static_cast<std::size_t>(middle)].head;
    for (;;) {
        const int a = nodes_[static_cast<std::size_t>(i)].parent;
        if (a == kTerminal) break;
        bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(a)].r_cap);
        i = arcs_[static_cast<std::size_t>(a)].head;
    }
    bottleneck = std::min(bottleneck, -nodes_[static_cast<std::size_t>(i)].tr_cap);

    arcs_[static_cast<std::size_t>(sister(middle))].r_cap += bottleneck;
    arcs_[static_cast<std::size_t>(middle)].r_cap -= bottleneck;

    i = arcs_[static_cast<std::size_t>(sister(middle))].head;
    for (;;) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        const int a = n.parent;
        if (a == kTerminal) break;
        arcs_[static_cast<std::size_t>(a)].r_cap += bottleneck;
        arcs_[static_cast<std::size_t>(sister(a))].r_cap -= bottleneck;
        if (arcs_[static_cast<std::size_t>(sister(a))].r_cap <= 0.0) {
            arcs_[static_cast<std::size_t>(sister(a))].r_cap = 0.0;
            n.parent = kOrphan;
            orphans_.push_front(i);
        }
        i = arcs_[static_cast<std::size_t>(a)].head;
    }
    {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        n.tr_cap -= bottleneck;
        if (n.tr_cap <= 0.0) {
            n.tr_cap = 0.0;
            n.parent = kOrphan;
            orphans_.push_front(i);
        }
    }

    i = arcs_[static_cast<std::size_t>(middle)].head;
    for (;;) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        const int a = n.parent;
        if (a == kTerminal) break;
        arcs_[static_cast<std::size_t>(sister(a))].r_cap += bottleneck;
        arcs_[static_cast<std::size_t>(a)].r_cap -= bottleneck;
        if (arcs_[static_cast<std::size_t>(a)].r_cap <= 0.0) {
            arcs_[static_cast<std::size_t>(a)].r_cap = 0.0;
            n.parent = kOrphan;
            orphans_.push_front(i);
        }
        i = arcs_[static_cast<std::size_t>(a)].head;
    }
    {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        n.tr_cap += bottleneck;
        if (n.tr_cap >= 0.0) {
            n.tr_cap = 0.0;
            n.parent = kOrphan;
            orphans_.push_front(i);
        }
    }

    flow_ += bottleneck;
}

void MaxFlowGraph::process_source_orphan(int i)
{
    constexpr int kInfinite = std::numeric_limits<int>::max();
    int best_arc = kNone;
    int best_dist = kInfinite;

    for (int a0 = nodes_[static_cast<std::size_t>(i)].first; a0 != kNone; a0 = arcs_[static_cast<std::size_t>(a0)].next) {
        if (arcs_[static_cast<std::size_t>(sister(a0))].r_cap <= 0.0) continue;
        int j = arcs_[static_cast<std::size_t>(a0)].head;
        const Node& cand = nodes_[static_cast<std::size_t>(j)];
        if (cand.is_sink || cand.parent == kNone) continue;

        // walk to the root to check the origin
        int d = 0;
        for (;;) {
            Node& nj = nodes_[static_cast<std::size_t>(j)];
            if (nj.ts == time_) {
                d += nj.dist;
                break;
            }
            const int a = nj.parent;
            ++d;
            if (a == kTerminal) {
                nj.ts = time_;
                nj.dist = 1;
                break;
            }
            if (a == kOrphan) {
                d = kInfinite;
                break;
            }
            j = arcs_[static_cast<std::size_t>(a)].head;
        }
        if (d < kInfinite) {
            if (d < best_dist) {
                best_arc = a0;
                best_dist = d;
            }
            for (j = arcs_[static_cast<std::size_t>(a0)].head; nodes_[static_cast<std::size_t>(j)].ts != time_;
                 j = arcs_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(j)].parent)].head) {
                nodes_[static_cast<std::size_t>(j)].ts = time_;
                nodes_[static_cast<std::size_t>(j)].dist = d--;
            }
        }
    }

    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (best_arc != kNone) {
        n.parent = best_arc;
        n.ts = time_;
        n.dist = best_dist + 1;
        return;
    }

    n.ts = 0;
    for (int a0 = n.first; a0 != kNone; a0 = arcs_[static_cast<std::size_t>(a0)].next) {
        const int j = arcs_[static_cast<std::size_t>(a0)].head;
        Node& nj = nodes_[static_cast<std::size_t>(j)];
        if (nj.is_sink || nj.parent == kNone) continue;
        if (arcs_[static_cast<std::size_t>(sister(a0))].r_cap > 0.0) set_active(j);
        if (nj.parent != kTerminal && nj.parent != kOrphan && arcs_[static_cast<std::size_t>(nj.parent)].head == i) {
            nj.parent = kOrphan;
            orphans_.push_back(j);
        }
    }
    n.parent = kNone;
}

void MaxFlowGraph::process_sink_orphan(int i)
{
    constexpr int kInfinite = std::numeric_limits<int>::max();
    int best_arc = kNone;
    int best_dist = kInfinite;

    for (int a0 = nodes_[static_cast<std::size_t>(i)].first; a0 != kNone; a0 = arcs_[static_cast<std::size_t>(a0)].next) {
        if (arcs_[static_cast<std::size_t>(a0)].r_cap <= 0.0) continue;
        int j = arcs_[static_cast<std::size_t>(a0)].head;
        const Node& cand = nodes_[static_cast<std::size_t>(j)];
        if (!cand.is_sink || cand.parent == kNone) continue;

        int d = 0;
        for (;;) {
            Node& nj = nodes_[static_cast<std::size_t>(j)];
            if (nj.ts == time_) {
                d += nj.dist;
                break;
            }
            const int a = nj.parent;
            ++d;
            if (a == kTerminal) {
                nj.ts = time_;
                nj.dist = 1;
                break;
            }
            if (a == kOrphan) {
                d = kInfinite;
                break;
            }
            j = arcs_[static_cast<std::size_t>(a)].head;
        }
        if (d < kInfinite) {
            if (d < best_dist) {
                best_arc = a0;
                best_dist = d;
            }
            for (j = arcs_[static_cast<std::size_t>(a0)].head; nodes_[static_cast<std::size_t>(j)].ts != time_;
                 j = arcs_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(j)].parent)].head) {
                nodes_[static_cast<std::size_t>(j)].ts = time_;
                nodes_[static_cast<std::size_t>(j)].dist = d--;
            }
        }
    }

    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (best_arc != kNone) {
        n.parent = best_arc;
        n.ts = time_;
        n.dist = best_dist + 1;
        return;
    }

    n.ts = 0;
    for (int a0 = n.first; a0 != kNone; a0 = arcs_[static_cast<std::size_t>(a0)].next) {
        const int j = arcs_[static_cast<std::size_t>(a0)].head;
        Node& nj = nodes_[static_cast<std::size_t>(j)];
        if (!nj.is_sink || nj.parent == kNone) continue;
        if (arcs_[static_cast<std::size_t>(a0)].r_cap > 0.0) set_active(j);
        if (nj.parent != kTerminal && nj.parent != kOrphan && arcs_[static_cast<std::size_t>(nj.parent)].head == i) {
            nj.parent = kOrphan;
            orphans_.push_back(j);
        }
    }
    n.parent = kNone;
}

double MaxFlowGraph::solve()
{
    if (solved_) return flow_;
    solved_ = true;

    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        Node& n = nodes_[k];
        n.active = false;
        n.ts = 0;
        if (n.tr_cap > 0.0) {
            n.is_sink = false;
            n.parent = kTerminal;
            n.dist = 1;
            set_active(static_cast<int>(k));
        } else if (n.tr_cap < 0.0) {
            n.is_sink = true;
            n.parent = kTerminal;
            n.dist = 1;
            set_active(static_cast<int>(k));
        } else {
            n.parent = kNone;
        }
    }

    int current = kNone;
    for (;;) {
        int i = current;
        if (i != kNone) {
            nodes_[static_cast<std::size_t>(i)].active = false;
            if (nodes_[static_cast<std::size_t>(i)].parent == kNone) i = kNone;
        }
        if (i == kNone) {
            i = next_active();
            if (i == kNone) break;
        }

        // growth
        int middle = kNone;
        const Node& ni = nodes_[static_cast<std::size_t>(i)];
        if (!ni.is_sink) {
            for (int a = ni.first; a != kNone; a = arcs_[static_cast<std::size_t>(a)].next) {
                if (arcs_[static_cast<std::size_t>(a)].r_cap <= 0.0) continue;
                const int j = arcs_[static_cast<std::size_t>(a)].head;
                Node& nj = nodes_[static_cast<std::size_t>(j)];
                if (nj.parent == kNone) {
                    nj.is_sink = false;
                    nj.parent = sister(a);
                    nj.ts = ni.ts;
                    nj.dist = ni.dist + 1;
                    set_active(j);
                } else if (nj.is_sink) {
                    middle = a;
                    break;
                } else if (nj.ts <= ni.ts && nj.dist > ni.dist) {
                    nj.parent = sister(a);
                    nj.ts = ni.ts;
                    nj.dist = ni.dist + 1;
                }
            }
        } else {
            for (int a = ni.first; a != kNone; a = arcs_[static_cast<std::size_t>(a)].next) {
                if (arcs_[static_cast<std::size_t>(sister(a))].r_cap <= 0.0) continue;
                const int j = arcs_[static_cast<std::size_t>(a)].head;
                Node& nj = nodes_[static_cast<std::size_t>(j)];
                if (nj.parent == kNone) {
                    nj.is_sink = true;
                    nj.parent = sister(a);
                    nj.ts = ni.ts;
                    nj.dist = ni.dist + 1;
                    set_active(j);
                } else if (!nj.is_sink) {
                    middle = sister(a);
                    break;
                } else if (nj.ts <= ni.ts && nj.dist > ni.dist) {
                    nj.parent = sister(a);
                    nj.ts = ni.ts;
                    nj.dist = ni.dist + 1;
                }
            }
        }

        ++time_;
        if (middle != kNone) {
            nodes_[static_cast<std::size_t>(i)].active = true;  // keep i out of the queue while it is current
            current = i;
            augment(middle);
            while (!orphans_.empty()) {
                const int o = orphans_.front();
                orphans_.pop_front();
                if (nodes_[static_cast<std::size_t>(o)].is_sink) process_sink_orphan(o);
                else process_source_orphan(o);
            }
        } else {
            current = kNone;
        }
    }
    return flow_;
}

bool MaxFlowGraph::in_source_set(int node) const
{
    const Node& n = nodes_.at(static_cast<std::size_t>(node));
    return n.parent != kNone && !n.is_sink;
}

}  // namespace lstcoseg
