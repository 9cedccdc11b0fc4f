#pragma once

// Network data model for positive linear interconnected systems
//
//     x_i' = -a_i x_i + sum_{j in N_i} m_ij x_j + d_i
//
// Nodes are addressed by stable 1-based indices. An edge keyed (to=i, from=j)
// means node j influences node i, i.e. entry (i, j) of the interconnection
// matrix M.

#include <robustnet/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace robustnet {

struct NodeId {
    std::size_t value = 1;

    constexpr std::size_t zero_based() const { return value - 1; }
    static constexpr NodeId from_zero_based(std::size_t k) { return NodeId{k + 1}; }

    friend constexpr auto operator<=>(const NodeId&, const NodeId&) = default;
};

struct EdgeKey {
    NodeId to;
    NodeId from;

    friend constexpr auto operator<=>(const EdgeKey&, const EdgeKey&) = default;
};

using EdgeMap = std::map<EdgeKey, double>;

class Network {
public:
    /// Stores the data as given; use validate() or require_valid() to check it.
    explicit Network(std::vector<double> self_feedback, EdgeMap edges = {})
        : self_feedback_(std::move(self_feedback)), edges_(std::move(edges)) {}

    std::size_t size() const { return self_feedback_.size(); }

    const std::vector<double>& self_feedback() const { return self_feedback_; }
    double self_feedback(NodeId i) const { return self_feedback_.at(i.zero_based()); }

    const EdgeMap& edges() const { return edges_; }

    bool has_edge(NodeId to, NodeId from) const { return edges_.contains({to, from}); }

    std::optional<double> edge_weight(NodeId to, NodeId from) const {
        auto it = edges_.find({to, from});
        if (it == edges_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(NodeId i) const { return i.value >= 1 && i.value <= size(); }

    friend bool operator==(const Network&, const Network&) = default;

private:
    std::vector<double> self_feedback_;
    EdgeMap edges_;
};

struct Violation {
    std::string location;
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

/// Empty result means the network satisfies every model invariant.
inline std::vector<Violation> validate(const Network& net) {
    std::vector<Violation> out;
    const std::size_t n = net.size();
    if (n == 0) out.push_back({"node_count", "node_count must be positive"});

    for (std::size_t k = 0; k < n; ++k) {
        const double a = net.self_feedback()[k];
        const std::string loc = "self_feedback[" + std::to_string(k + 1) + "]";
        if (!std::isfinite(a)) {
            out.push_back({loc, loc + " is not finite"});
        } else if (a <= 0.0) {
            out.push_back({loc, loc + " <= 0"});
        }
    }

    for (const auto& [key, weight] : net.edges()) {
        const std::string loc =
            "edge(" + std::to_string(key.to.value) + "," + std::to_string(key.from.value) + ")";
        if (!net.contains(key.to) || !net.contains(key.from)) {
            out.push_back({loc, loc + " node index out of range [1.." + std::to_string(n) + "]"});
        }
        if (key.to == key.from) out.push_back({loc, "self-loop at node " + std::to_string(key.to.value)});
        if (!std::isfinite(weight)) {
            out.push_back({loc, loc + " weight is not finite"});
        } else if (weight <= 0.0) {
            out.push_back({loc, loc + " weight <= 0"});
        }
    }
    return out;
}

inline void require_valid(const Network& net) {
    auto violations = validate(net);
    if (violations.empty()) return;
    std::string msg = "invalid network:";
    for (const auto& v : violations) msg += " " + v.message + ";";
    throw Error(ErrorKind::InvalidNetwork, msg);
}

inline void require_node(const Network& net, NodeId i) {
    if (!net.contains(i)) {
        throw Error(ErrorKind::IndexOutOfRange,
                    "node " + std::to_string(i.value) + " out of range [1.." +
                        std::to_string(net.size()) + "]");
    }
}

inline std::set<NodeId> neighbors_in(const Network& net, NodeId i) {
    require_node(net, i);
    std::set<NodeId> out;
    for (auto it = net.edges().lower_bound({i, NodeId{0}});
         it != net.edges().end() && it->first.to == i; ++it) {
        out.insert(it->first.from);
    }
    return out;
}

/// Dense M with (M)_ij = m_ij and a zero diagonal.
inline Eigen::MatrixXd weighted_adjacency(const Network& net) {
    const auto n = static_cast<Eigen::Index>(net.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [key, weight] : net.edges()) {
        m(static_cast<Eigen::Index>(key.to.zero_based()),
          static_cast<Eigen::Index>(key.from.zero_based())) = weight;
    }
    return m;
}

/// A - M, the M-matrix whose inverse carries every robustness quantity.
inline Eigen::MatrixXd system_matrix(const Network& net) {
    Eigen::MatrixXd k = -weighted_adjacency(net);
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto d = static_cast<Eigen::Index>(i);
        k(d, d) = net.self_feedback()[i];
    }
    return k;
}

/// M A^{-1}: column j scaled by 1/a_j. Its graph carries the walk weights.
inline Eigen::MatrixXd scaled_adjacency(const Network& net) {
    Eigen::MatrixXd b = weighted_adjacency(net);
    for (std::size_t j = 0; j < net.size(); ++j) {
        b.col(static_cast<Eigen::Index>(j)) /= net.self_feedback()[j];
    }
    return b;
}

inline Eigen::VectorXd self_feedback_vector(const Network& net) {
    return Eigen::Map<const Eigen::VectorXd>(net.self_feedback().data(),
                                             static_cast<Eigen::Index>(net.size()));
}

} // namespace robustnet
