#pragma once

// Unweighted graph algorithms over the influence graph of a network.
//
// Orientation is signal flow: an edge (to=i, from=j) becomes the arc j -> i,
// so walks follow the direction in which disturbances propagate.

#include <robustnet/error.hpp>
#include <robustnet/network.hpp>

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

namespace robustnet::graph {

using Adjacency = std::vector<std::vector<std::size_t>>;

/// Zero-based successor lists in signal-flow direction, each sorted ascending.
inline Adjacency flow_adjacency(const Network& net) {
    Adjacency adj(net.size());
    for (const auto& [key, weight] : net.edges()) {
        adj[key.from.zero_based()].push_back(key.to.zero_based());
    }
    for (auto& succ : adj) std::sort(succ.begin(), succ.end());
    return adj;
}

inline Adjacency reversed(const Adjacency& adj) {
    Adjacency rev(adj.size());
    for (std::size_t v = 0; v < adj.size(); ++v) {
        for (std::size_t w : adj[v]) rev[w].push_back(v);
    }
    for (auto& pred : rev) std::sort(pred.begin(), pred.end());
    return rev;
}

/// Strongly connected components (iterative Tarjan). Returns the component
/// id of every vertex; ids are dense in [0, count).
struct Components {
    std::vector<std::size_t> id;
    std::size_t count = 0;
};

inline Components strongly_connected_components(const Adjacency& adj) {
    constexpr std::size_t unvisited = std::numeric_limits<std::size_t>::max();
    const std::size_t n = adj.size();
    std::vector<std::size_t> index(n, unvisited), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    Components comps{std::vector<std::size_t>(n, unvisited), 0};
    std::size_t counter = 0;

    struct Frame {
        std::size_t v;
        std::size_t next;
    };
    std::vector<Frame> call;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        call.push_back({root, 0});
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;

        while (!call.empty()) {
            Frame& f = call.back();
            if (f.next < adj[f.v].size()) {
                const std::size_t w = adj[f.v][f.next++];
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
                continue;
            }
            const std::size_t v = f.v;
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comps.id[w] = comps.count;
                } while (w != v);
                ++comps.count;
            }
        }
    }
    return comps;
}

inline bool has_cycle(const Adjacency& adj) {
    const auto comps = strongly_connected_components(adj);
    if (comps.count < adj.size()) return true;
    for (std::size_t v = 0; v < adj.size(); ++v) {
        if (std::binary_search(adj[v].begin(), adj[v].end(), v)) return true;
    }
    return false;
}

/// Marks every vertex from which some target is reachable (targets included),
/// by BFS over the reversed arcs.
inline std::vector<bool> can_reach(const Adjacency& adj, const std::vector<std::size_t>& targets) {
    const Adjacency rev = reversed(adj);
    std::vector<bool> seen(adj.size(), false);
    std::deque<std::size_t> queue;
    for (std::size_t t : targets) {
        if (!seen[t]) {
            seen[t] = true;
            queue.push_back(t);
        }
    }
    while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        for (std::size_t w : rev[v]) {
            if (!seen[w]) {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    return seen;
}

/// Johnson's algorithm. Calls `emit` with each simple cycle as a vertex
/// sequence starting at its smallest vertex (closing arc implied). Throws
/// CycleBudgetExceeded as soon as more than `cap` cycles are found.
inline void simple_cycles(const Adjacency& adj, std::size_t cap,
                          const std::function<void(const std::vector<std::size_t>&)>& emit) {
    const std::size_t n = adj.size();
    std::vector<bool> blocked(n, false);
    std::vector<std::vector<std::size_t>> blocked_by(n);
    std::vector<bool> in_scope(n, false);
    std::vector<std::size_t> path;
    std::size_t found_total = 0;

    auto unblock = [&](std::size_t start) {
        std::vector<std::size_t> pending{start};
        while (!pending.empty()) {
            const std::size_t u = pending.back();
            pending.pop_back();
            if (!blocked[u]) continue;
            blocked[u] = false;
            for (std::size_t w : blocked_by[u]) pending.push_back(w);
            blocked_by[u].clear();
        }
    };

    struct Frame {
        std::size_t v;
        std::size_t next;
        bool closed;
    };

    for (std::size_t s = 0; s < n; ++s) {
        // Restrict to the strongly connected component of s in the subgraph
        // induced by vertices >= s.
        Adjacency sub(n);
        for (std::size_t v = s; v < n; ++v) {
            for (std::size_t w : adj[v]) {
                if (w >= s) sub[v].push_back(w);
            }
        }
        const auto comps = strongly_connected_components(sub);
        bool any_arc = false;
        for (std::size_t v = 0; v < n; ++v) {
            in_scope[v] = v >= s && comps.id[v] == comps.id[s];
            blocked[v] = false;
            blocked_by[v].clear();
        }
        for (std::size_t w : sub[s]) any_arc = any_arc || in_scope[w];
        if (!any_arc) continue;

        std::vector<Frame> call{{s, 0, false}};
        blocked[s] = true;
        path.assign(1, s);

        while (!call.empty()) {
            Frame& f = call.back();
            if (f.next < sub[f.v].size()) {
                const std::size_t w = sub[f.v][f.next++];
                if (!in_scope[w]) continue;
                if (w == s) {
                    if (++found_total > cap) {
                        throw Error(ErrorKind::CycleBudgetExceeded,
                                    "more than " + std::to_string(cap) + " simple cycles");
                    }
                    emit(path);
                    f.closed = true;
                } else if (!blocked[w]) {
                    blocked[w] = true;
                    path.push_back(w);
                    call.push_back({w, 0, false});
                }
                continue;
            }
            const Frame done = f;
            call.pop_back();
            if (done.closed) {
                unblock(done.v);
            } else {
                for (std::size_t w : sub[done.v]) {
                    if (!in_scope[w]) continue;
                    auto& list = blocked_by[w];
                    if (std::find(list.begin(), list.end(), done.v) == list.end()) list.push_back(done.v);
                }
            }
            path.pop_back();
            if (!call.empty()) call.back().closed = call.back().closed || done.closed;
        }
    }
}

} // namespace robustnet::graph
