#pragma once

// Elementary structural changes and their scalability verdicts.
//
// A change is scalable when every gamma for which the original network is
// gamma-robust remains valid afterwards. Since max_i u_i is the smallest such
// gamma, the decision reduces to: the changed network is stable and
// u_after <= gamma_before elementwise.

#include <robustnet/analysis.hpp>
#include <robustnet/error.hpp>
#include <robustnet/graph.hpp>
#include <robustnet/network.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace robustnet {

struct RemoveNode {
    NodeId node;
    friend bool operator==(const RemoveNode&, const RemoveNode&) = default;
};
struct RemoveEdge {
    NodeId to;
    NodeId from;
    friend bool operator==(const RemoveEdge&, const RemoveEdge&) = default;
};
struct AddNode {
    double a_new = 0.0;
    friend bool operator==(const AddNode&, const AddNode&) = default;
};
struct AddEdge {
    NodeId to;
    NodeId from;
    double weight = 0.0;
    friend bool operator==(const AddEdge&, const AddEdge&) = default;
};

using StructuralChange = std::variant<RemoveNode, RemoveEdge, AddNode, AddEdge>;

/// Removes every edge incident to `node`, then the node itself.
struct RemoveNodeCascade {
    NodeId node;
    friend bool operator==(const RemoveNodeCascade&, const RemoveNodeCascade&) = default;
};

/// Raises a_node to a_new (>= current value).
struct RaiseSelfFeedback {
    NodeId node;
    double a_new = 0.0;
    friend bool operator==(const RaiseSelfFeedback&, const RaiseSelfFeedback&) = default;
};

using SequenceStep = std::variant<RemoveNode, RemoveEdge, AddNode, AddEdge, RemoveNodeCascade, RaiseSelfFeedback>;

struct SelfFeedbackRepair {
    NodeId node;
    double a_old = 0.0;
    double a_new = 0.0;

    RaiseSelfFeedback as_step() const { return {node, a_new}; }
};

struct ChangeOptions {
    AnalysisOptions analysis{};
    /// Relative slack on u_after <= gamma_before, absorbing round-off at exact
    /// boundaries such as a_new = 1 / gamma_before.
    double scalability_tolerance = 1e-12;
    /// Also solve the changed system from scratch and record the discrepancy
    /// against the rank-one update.
    bool verify_direct = false;
};

struct AddEdgeDetail {
    /// e_j^T (A - M)^{-1} e_i: weighted walk sum from the new edge's head i
    /// back to its tail j.
    double walk_gain = 0.0;
    /// m_ij * walk_gain; the change destabilises iff this reaches 1.
    double loop_gain = 0.0;
    /// A directed path runs from i to some argmax node of u (length zero
    /// included). Such a change can never be scalable.
    bool path_to_argmax = false;
    /// Outcome of the rank-one bound test u_after <= gamma_before alone.
    bool within_bound = false;
    /// u_i + (m_ij / a_i) u_j, a lower bound on u_after at i.
    double lower_bound = 0.0;
};

struct ChangeVerdict {
    bool scalable = false;
    bool stable_after = false;
    Eigen::VectorXd u_before;
    Eigen::VectorXd u_after;  // empty when the change destabilises
    double gamma_before = 0.0;
    std::optional<double> gamma_after;
    /// u_after - u_before on nodes present in both; a node added by the
    /// change contributes 0. Negative entries are improvements.
    Eigen::VectorXd performance_loss;
    std::optional<SelfFeedbackRepair> repair;
    std::optional<AddEdgeDetail> add_edge;
    /// max_k |u_incremental - u_direct| / max(1, |u_direct|), when verified.
    std::optional<double> direct_discrepancy;
};

struct ApplyResult {
    Network network;
    /// old index -> new index; nullopt for removed nodes.
    std::vector<std::optional<NodeId>> index_map;
};

namespace detail {

[[noreturn]] inline void precondition(const std::string& msg) {
    throw Error(ErrorKind::PreconditionViolated, msg);
}

inline std::string edge_name(NodeId to, NodeId from) {
    return "(" + std::to_string(to.value) + "," + std::to_string(from.value) + ")";
}

inline bool has_incident_edges(const Network& net, NodeId node) {
    return std::any_of(net.edges().begin(), net.edges().end(),
                       [&](const auto& e) { return e.first.to == node || e.first.from == node; });
}

inline void check(const Network& net, const RemoveNode& c) {
    require_node(net, c.node);
    if (has_incident_edges(net, c.node)) {
        precondition("node " + std::to_string(c.node.value) + " has incident edges; remove them first");
    }
    if (net.size() == 1) precondition("cannot remove the last node of a network");
}

inline void check(const Network& net, const RemoveEdge& c) {
    require_node(net, c.to);
    require_node(net, c.from);
    if (!net.has_edge(c.to, c.from)) precondition("edge " + edge_name(c.to, c.from) + " is not present");
}

inline void check(const Network&, const AddNode& c) {
    if (!(c.a_new > 0.0) || !std::isfinite(c.a_new)) precondition("added node needs a positive finite rate");
}

inline void check(const Network& net, const AddEdge& c) {
    require_node(net, c.to);
    require_node(net, c.from);
    if (c.to == c.from) precondition("self-loops are not allowed");
    if (net.has_edge(c.to, c.from)) precondition("edge " + edge_name(c.to, c.from) + " is already present");
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) precondition("added edge needs a positive finite weight");
}

inline void check(const Network& net, const RemoveNodeCascade& c) {
    require_node(net, c.node);
    if (net.size() == 1) precondition("cannot remove the last node of a network");
}

inline void check(const Network& net, const RaiseSelfFeedback& c) {
    require_node(net, c.node);
    if (!std::isfinite(c.a_new) || c.a_new < net.self_feedback(c.node)) {
        precondition("self-feedback of node " + std::to_string(c.node.value) + " can only be raised");
    }
}

inline std::vector<std::optional<NodeId>> identity_map(std::size_t n) {
    std::vector<std::optional<NodeId>> map(n);
    for (std::size_t k = 0; k < n; ++k) map[k] = NodeId::from_zero_based(k);
    return map;
}

inline ApplyResult drop_node(const Network& net, NodeId node) {
    auto map = identity_map(net.size());
    std::vector<double> a;
    for (std::size_t k = 0; k < net.size(); ++k) {
        if (k == node.zero_based()) {
            map[k].reset();
            continue;
        }
        if (k > node.zero_based()) map[k] = NodeId{k};
        a.push_back(net.self_feedback()[k]);
    }
    EdgeMap edges;
    for (const auto& [key, w] : net.edges()) {
        if (key.to == node || key.from == node) continue;
        edges.emplace(EdgeKey{*map[key.to.zero_based()], *map[key.from.zero_based()]}, w);
    }
    return {Network(std::move(a), std::move(edges)), std::move(map)};
}

inline ApplyResult apply_checked(const Network& net, const RemoveNode& c) { return drop_node(net, c.node); }

inline ApplyResult apply_checked(const Network& net, const RemoveNodeCascade& c) { return drop_node(net, c.node); }

inline ApplyResult apply_checked(const Network& net, const RemoveEdge& c) {
    EdgeMap edges = net.edges();
    edges.erase({c.to, c.from});
    return {Network(net.self_feedback(), std::move(edges)), identity_map(net.size())};
}

inline ApplyResult apply_checked(const Network& net, const AddNode& c) {
    std::vector<double> a = net.self_feedback();
    a.push_back(c.a_new);
    return {Network(std::move(a), net.edges()), identity_map(net.size())};
}

inline ApplyResult apply_checked(const Network& net, const AddEdge& c) {
    EdgeMap edges = net.edges();
    edges.emplace(EdgeKey{c.to, c.from}, c.weight);
    return {Network(net.self_feedback(), std::move(edges)), identity_map(net.size())};
}

inline ApplyResult apply_checked(const Network& net, const RaiseSelfFeedback& c) {
    std::vector<double> a = net.self_feedback();
    a[c.node.zero_based()] = c.a_new;
    return {Network(std::move(a), net.edges()), identity_map(net.size())};
}

/// (A - M)^{-1} is entrywise nonnegative, so round-off below zero is dropped.
inline Eigen::VectorXd nonnegative_column(const SystemSolver& solver, NodeId i) {
    return solver.resolvent_column(i).cwiseMax(0.0);
}

inline bool within_bound(const Eigen::VectorXd& u, double gamma, double tol) {
    return (u.array() <= gamma * (1.0 + tol)).all();
}

inline double discrepancy(const Eigen::VectorXd& incremental, const Eigen::VectorXd& direct) {
    const Eigen::ArrayXd scale = direct.array().abs().max(1.0);
    return ((incremental - direct).array().abs() / scale).maxCoeff();
}

inline ChangeVerdict start_verdict(const Network& net, const ChangeOptions& opts) {
    const RobustnessReport before = robustness_vector(net, opts.analysis);
    ChangeVerdict v;
    v.u_before = before.u;
    v.gamma_before = *before.gamma_min;
    return v;
}

inline void finish_stable(ChangeVerdict& v, Eigen::VectorXd u_after, const ChangeOptions& opts) {
    v.stable_after = true;
    v.gamma_after = u_after.maxCoeff();
    v.scalable = within_bound(u_after, v.gamma_before, opts.scalability_tolerance);
    v.u_after = std::move(u_after);
}

inline Eigen::VectorXd drop_entry(const Eigen::VectorXd& u, NodeId node) {
    const auto k = static_cast<Eigen::Index>(node.zero_based());
    Eigen::VectorXd out(u.size() - 1);
    out << u.head(k), u.tail(u.size() - k - 1);
    return out;
}

} // namespace detail

/// Applies one change; throws PreconditionViolated when it does not fit `net`.
template <typename Change>
ApplyResult apply(const Network& net, const Change& change) {
    require_valid(net);
    if constexpr (std::is_same_v<Change, StructuralChange> || std::is_same_v<Change, SequenceStep>) {
        return std::visit([&](const auto& c) { return robustnet::apply(net, c); }, change);
    } else {
        detail::check(net, change);
        return detail::apply_checked(net, change);
    }
}

/// The RemoveEdge steps followed by the RemoveNode step a cascade stands for.
inline std::vector<StructuralChange> expand_cascade(const Network& net, const RemoveNodeCascade& c) {
    detail::check(net, c);
    std::vector<StructuralChange> out;
    for (const auto& [key, w] : net.edges()) {
        if (key.to == c.node || key.from == c.node) out.push_back(RemoveEdge{key.to, key.from});
    }
    out.push_back(RemoveNode{c.node});
    return out;
}

/// Always scalable: u restricted to the surviving nodes is unchanged.
inline ChangeVerdict verdict_remove_node(const Network& net, const RemoveNode& change,
                                         const ChangeOptions& opts = {}) {
    require_valid(net);
    detail::check(net, change);
    ChangeVerdict v = detail::start_verdict(net, opts);
    detail::finish_stable(v, detail::drop_entry(v.u_before, change.node), opts);
    v.performance_loss = Eigen::VectorXd::Zero(v.u_after.size());
    if (opts.verify_direct) {
        const Network after = detail::apply_checked(net, change).network;
        v.direct_discrepancy = detail::discrepancy(v.u_after, SystemSolver(after).robustness_vector());
    }
    return v;
}

/// Always scalable. u_after by the rank-one update with weight -m_ij:
///   u_after = u - m_ij / (1 + m_ij c) * (A - M)^{-1} e_i * u_j.
inline ChangeVerdict verdict_remove_edge(const Network& net, const RemoveEdge& change,
                                         const ChangeOptions& opts = {}) {
    require_valid(net);
    detail::check(net, change);
    ChangeVerdict v = detail::start_verdict(net, opts);

    const double m = *net.edge_weight(change.to, change.from);
    const SystemSolver solver(net);
    const Eigen::VectorXd z = detail::nonnegative_column(solver, change.to);
    const double c = z(static_cast<Eigen::Index>(change.from.zero_based()));
    const double u_j = v.u_before(static_cast<Eigen::Index>(change.from.zero_based()));
    Eigen::VectorXd u_after = v.u_before - (m / (1.0 + m * c) * u_j) * z;

    detail::finish_stable(v, std::move(u_after), opts);
    v.performance_loss = v.u_after - v.u_before;
    if (opts.verify_direct) {
        const Network after = detail::apply_checked(net, change).network;
        v.direct_discrepancy = detail::discrepancy(v.u_after, SystemSolver(after).robustness_vector());
    }
    return v;
}

/// Scalable iff a_new >= 1 / gamma_before; u_after = (u, 1 / a_new).
inline ChangeVerdict verdict_add_node(const Network& net, const AddNode& change, const ChangeOptions& opts = {}) {
    require_valid(net);
    detail::check(net, change);
    ChangeVerdict v = detail::start_verdict(net, opts);
    Eigen::VectorXd u_after(v.u_before.size() + 1);
    u_after << v.u_before, 1.0 / change.a_new;
    detail::finish_stable(v, std::move(u_after), opts);
    v.performance_loss = Eigen::VectorXd::Zero(v.u_after.size());
    return v;
}

/// Certified lower bound u_i + (m / a_i) u_from on u_after at the head `to`.
inline double lower_bound_added_edge(const Network& net, NodeId to, NodeId from, double weight,
                                     const AnalysisOptions& opts = {}) {
    require_valid(net);
    detail::check(net, AddEdge{to, from, weight});
    const RobustnessReport r = robustness_vector(net, opts);
    const auto i = static_cast<Eigen::Index>(to.zero_based());
    const auto j = static_cast<Eigen::Index>(from.zero_based());
    return r.u(i) + weight / net.self_feedback(to) * r.u(j);
}

/// Tightest certificate of the network: v = u, gamma = max u.
inline Certificate default_certificate(const Network& net, const AnalysisOptions& opts = {}) {
    const RobustnessReport r = robustness_vector(net, opts);
    return {r.u, *r.gamma_min};
}

/// Raise a_i to a_i + m_ij v_j / v_i. With the repair applied the certificate
/// v stays valid for the changed network. The value is moved up by a few ulps
/// only if round-off would otherwise break the exact certificate check.
inline SelfFeedbackRepair propose_repair(const Network& net, const AddEdge& change, const Certificate& cert) {
    require_valid(net);
    detail::check(net, change);
    if (!check_certificate(net, cert)) throw Error(ErrorKind::InvalidCertificate, "certificate does not hold");

    const auto vi = cert.v(static_cast<Eigen::Index>(change.to.zero_based()));
    const auto vj = cert.v(static_cast<Eigen::Index>(change.from.zero_based()));
    SelfFeedbackRepair repair{change.to, net.self_feedback(change.to), 0.0};
    repair.a_new = repair.a_old + change.weight * (vj / vi);

    const Network with_edge = detail::apply_checked(net, change).network;
    for (int guard = 0; guard < 64; ++guard) {
        const Network repaired = detail::apply_checked(with_edge, repair.as_step()).network;
        if (check_certificate(repaired, cert)) break;
        repair.a_new = std::nextafter(repair.a_new, HUGE_VAL);
    }
    return repair;
}

/// Exact test: stable after the change and u_after <= gamma_before, with
///   c = e_j^T (A - M)^{-1} e_i,
///   u_after = u + m_ij / (1 - m_ij c) * (A - M)^{-1} e_i * u_j.
/// The change destabilises when 1 - m_ij c <= eps_stab. A path from i to an
/// argmax node of u rules scalability out regardless of round-off.
inline ChangeVerdict verdict_add_edge(const Network& net, const AddEdge& change, const ChangeOptions& opts = {}) {
    require_valid(net);
    detail::check(net, change);
    ChangeVerdict v = detail::start_verdict(net, opts);
    const auto i = static_cast<Eigen::Index>(change.to.zero_based());
    const auto j = static_cast<Eigen::Index>(change.from.zero_based());
    const double m = change.weight;

    const SystemSolver solver(net);
    const Eigen::VectorXd z = detail::nonnegative_column(solver, change.to);

    AddEdgeDetail info;
    info.walk_gain = z(j);
    info.loop_gain = m * info.walk_gain;
    info.lower_bound = v.u_before(i) + m / net.self_feedback(change.to) * v.u_before(j);

    std::vector<std::size_t> argmax;
    for (NodeId k : detail::argmax_nodes(v.u_before, v.gamma_before, opts.analysis.argmax_tolerance)) {
        argmax.push_back(k.zero_based());
    }
    info.path_to_argmax = graph::can_reach(graph::flow_adjacency(net), argmax)[change.to.zero_based()];

    const Network after = detail::apply_checked(net, change).network;
    const double denom = 1.0 - info.loop_gain;
    if (denom > opts.analysis.eps_stab && stability(after, opts.analysis).stable) {
        Eigen::VectorXd u_after = v.u_before + (m / denom * v.u_before(j)) * z;
        detail::finish_stable(v, std::move(u_after), opts);
        info.within_bound = v.scalable;
        v.scalable = v.scalable && !info.path_to_argmax;
        v.performance_loss = v.u_after - v.u_before;
        if (opts.verify_direct) {
            v.direct_discrepancy = detail::discrepancy(v.u_after, SystemSolver(after).robustness_vector());
        }
    } else {
        v.stable_after = false;
        v.scalable = false;
    }
    if (!v.scalable) v.repair = propose_repair(net, change, Certificate{v.u_before, v.gamma_before});
    v.add_edge = info;
    return v;
}

/// Always scalable by composition of edge and node removals.
inline ChangeVerdict verdict_remove_node_cascade(const Network& net, const RemoveNodeCascade& change,
                                                 const ChangeOptions& opts = {}) {
    require_valid(net);
    detail::check(net, change);
    ChangeVerdict v = detail::start_verdict(net, opts);
    const Network after = detail::apply_checked(net, change).network;
    Eigen::VectorXd u_after = SystemSolver(after).robustness_vector();
    detail::finish_stable(v, std::move(u_after), opts);
    v.performance_loss = v.u_after - detail::drop_entry(v.u_before, change.node);
    return v;
}

inline ChangeVerdict verdict_raise_self_feedback(const Network& net, const RaiseSelfFeedback& change,
                                                 const ChangeOptions& opts = {}) {
    require_valid(net);
    detail::check(net, change);
    ChangeVerdict v = detail::start_verdict(net, opts);
    const Network after = detail::apply_checked(net, change).network;
    detail::finish_stable(v, SystemSolver(after).robustness_vector(), opts);
    v.performance_loss = v.u_after - v.u_before;
    return v;
}

inline ChangeVerdict verdict(const Network& net, const SequenceStep& step, const ChangeOptions& opts = {}) {
    return std::visit(
        [&](const auto& c) -> ChangeVerdict {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, RemoveNode>) return verdict_remove_node(net, c, opts);
            else if constexpr (std::is_same_v<T, RemoveEdge>) return verdict_remove_edge(net, c, opts);
            else if constexpr (std::is_same_v<T, AddNode>) return verdict_add_node(net, c, opts);
            else if constexpr (std::is_same_v<T, AddEdge>) return verdict_add_edge(net, c, opts);
            else if constexpr (std::is_same_v<T, RemoveNodeCascade>) return verdict_remove_node_cascade(net, c, opts);
            else return verdict_raise_self_feedback(net, c, opts);
        },
        step);
}

inline ChangeVerdict verdict(const Network& net, const StructuralChange& change, const ChangeOptions& opts = {}) {
    return std::visit([&](const auto& c) { return verdict(net, SequenceStep{c}, opts); }, change);
}

/// Sufficient, row-local test: with the same certificate v,
///   a_i >= (sum_{k in N_i} m_ik v_k + m_ij v_j + 1) / v_i
/// keeps v valid after adding the edge. Only row i of the data is read.
inline bool sufficient_local_check(const Network& net, const AddEdge& change, const Certificate& cert) {
    require_valid(net);
    detail::check(net, change);
    if (!check_certificate(net, cert)) throw Error(ErrorKind::InvalidCertificate, "certificate does not hold");
    double incoming = 0.0;
    for (NodeId k : neighbors_in(net, change.to)) {
        incoming += *net.edge_weight(change.to, k) * cert.v(static_cast<Eigen::Index>(k.zero_based()));
    }
    const double numerator =
        incoming + change.weight * cert.v(static_cast<Eigen::Index>(change.from.zero_based())) + 1.0;
    return net.self_feedback(change.to) >= numerator / cert.v(static_cast<Eigen::Index>(change.to.zero_based()));
}

/// The local test with v = gamma 1, valid when A - M is strictly diagonally
/// dominant: a_i >= sum_k m_ik + m_ij + 1 / gamma.
inline bool diagonal_dominance_check(const Network& net, const AddEdge& change, double gamma) {
    require_valid(net);
    detail::check(net, change);
    detail::require_positive_gamma(gamma);
    std::vector<double> row_sum(net.size(), 0.0);
    for (const auto& [key, w] : net.edges()) row_sum[key.to.zero_based()] += w;
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (!(net.self_feedback()[i] > row_sum[i])) {
            throw Error(ErrorKind::NotDiagonallyDominant,
                        "row " + std::to_string(i + 1) + " of A - M is not strictly diagonally dominant");
        }
    }
    const Certificate uniform{Eigen::VectorXd::Constant(static_cast<Eigen::Index>(net.size()), gamma), gamma};
    if (!check_certificate(net, uniform)) {
        throw Error(ErrorKind::InvalidCertificate, "v = gamma 1 is not a certificate at this gamma");
    }
    const std::size_t i = change.to.zero_based();
    return net.self_feedback()[i] >= row_sum[i] + change.weight + 1.0 / gamma;
}

struct StepRecord {
    std::size_t index = 0;  // 1-based position in the sequence
    SequenceStep step;
    ChangeVerdict verdict;
    std::vector<std::optional<NodeId>> index_map;
};

struct SequenceReport {
    double gamma = 0.0;
    RobustnessReport initial;
    std::vector<StepRecord> steps;
    /// Set when a step destabilised the network; later steps were not run.
    std::optional<std::size_t> halted_at;
    Network final_network{std::vector<double>{}};
    RobustnessReport final_report;
    /// Final network is stable with gamma_min <= gamma (same slack as verdicts).
    bool final_robust = false;

    bool all_scalable() const {
        return std::all_of(steps.begin(), steps.end(), [](const StepRecord& s) { return s.verdict.scalable; });
    }
};

/// Applies the steps in order with a verdict per step. Non-scalable steps are
/// recorded and the run continues; a destabilising step ends it. Errors carry
/// the 1-based step index.
inline SequenceReport check_sequence(const Network& net, const std::vector<SequenceStep>& steps, double gamma,
                                     const ChangeOptions& opts = {}) {
    detail::require_positive_gamma(gamma);
    SequenceReport report;
    report.gamma = gamma;
    report.initial = robustness_vector(net, opts.analysis);
    report.final_network = net;
    report.final_report = report.initial;

    for (std::size_t k = 0; k < steps.size(); ++k) {
        try {
            StepRecord rec{k + 1, steps[k], verdict(report.final_network, steps[k], opts), {}};
            const bool stable = rec.verdict.stable_after;
            ApplyResult applied = robustnet::apply(report.final_network, steps[k]);
            rec.index_map = std::move(applied.index_map);
            report.final_network = std::move(applied.network);
            report.steps.push_back(std::move(rec));
            if (!stable) {
                report.halted_at = k + 1;
                break;
            }
        } catch (const Error& e) {
            throw Error(e.kind(), "step " + std::to_string(k + 1) + ": " + e.what(), k + 1);
        }
    }

    report.final_report = analyze(report.final_network, opts.analysis);
    report.final_robust = !report.halted_at && report.final_report.stable &&
                          *report.final_report.gamma_min <= gamma * (1.0 + opts.scalability_tolerance);
    return report;
}

} // namespace robustnet
