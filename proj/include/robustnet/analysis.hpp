#pragma once

// Robustness analysis: Hurwitz test, robustness vector u = (A - M)^{-1} 1,
// certificates, truncated walk sums and the cycle small-gain condition.

#include <robustnet/error.hpp>
#include <robustnet/graph.hpp>
#include <robustnet/network.hpp>
#include <robustnet/spectral.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace robustnet {

struct AnalysisOptions {
    /// Relative margin for the rho < 1 decision.
    double eps_stab = 1e-9;
    PowerIterationOptions power{};
    /// Indices with u_i >= gamma_min * (1 - argmax_tolerance) are reported.
    double argmax_tolerance = 1e-12;
    std::size_t cycle_cap = 1'000'000;
};

struct Stability {
    bool stable = false;
    double spectral_radius = 0.0;
    /// rho is within eps_stab of 1, or power iteration could not separate it from 1.
    bool near_boundary = false;
    SpectralEstimate estimate{};
};

struct RobustnessReport {
    bool stable = false;
    double spectral_radius = 0.0;
    bool near_boundary = false;
    Eigen::VectorXd u;                // empty unless stable
    std::optional<double> gamma_min;  // max_i u_i
    std::vector<NodeId> argmax_nodes;
};

struct Certificate {
    Eigen::VectorXd v;
    double gamma = 0.0;
};

/// LU factorisation of A - M shared by every solve against the same network.
class SystemSolver {
public:
    explicit SystemSolver(const Network& net) : lu_(system_matrix(net)) {}

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return lu_.solve(rhs); }

    Eigen::VectorXd robustness_vector() const {
        return solve(Eigen::VectorXd::Ones(lu_.rows()));
    }

    /// (A - M)^{-1} e_i: weighted walk sums from node i to every node.
    Eigen::VectorXd resolvent_column(NodeId i) const {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(lu_.rows());
        e(static_cast<Eigen::Index>(i.zero_based())) = 1.0;
        return solve(e);
    }

private:
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

inline Stability stability(const Network& net, const AnalysisOptions& opts = {}) {
    require_valid(net);
    Stability s;
    s.estimate = spectral_radius_nonnegative(scaled_adjacency(net), opts.power);
    s.spectral_radius = s.estimate.radius;
    const double threshold = 1.0 - opts.eps_stab;
    if (s.estimate.upper < threshold) {
        s.stable = true;
    } else if (s.estimate.lower >= threshold) {
        s.stable = false;
    } else {
        s.stable = s.estimate.radius < threshold;
        s.near_boundary = !s.estimate.converged;
    }
    if (std::abs(s.spectral_radius - 1.0) <= opts.eps_stab) s.near_boundary = true;
    return s;
}

namespace detail {

inline std::vector<NodeId> argmax_nodes(const Eigen::VectorXd& u, double gamma, double tol) {
    std::vector<NodeId> out;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (u(i) >= gamma * (1.0 - tol)) out.push_back(NodeId::from_zero_based(static_cast<std::size_t>(i)));
    }
    return out;
}

/// (A - M) v evaluated row by row in edge order.
inline Eigen::VectorXd certificate_rows(const Network& net, const Eigen::VectorXd& v) {
    Eigen::VectorXd row(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) row(i) = net.self_feedback()[static_cast<std::size_t>(i)] * v(i);
    for (const auto& [key, weight] : net.edges()) {
        row(static_cast<Eigen::Index>(key.to.zero_based())) -=
            weight * v(static_cast<Eigen::Index>(key.from.zero_based()));
    }
    return row;
}

/// Solves (A - M) u = 1, then scales u up by a few ulps if needed so that the
/// computed rows (A - M) u are >= 1 exactly. The returned u is therefore
/// itself a certificate at gamma = max u.
inline Eigen::VectorXd certified_solution(const Network& net) {
    Eigen::VectorXd u = SystemSolver(net).robustness_vector();
    double bump = 4.0 * std::numeric_limits<double>::epsilon();
    for (int attempt = 0; attempt < 16; ++attempt) {
        if ((certificate_rows(net, u).array() >= 1.0).all()) break;
        u *= 1.0 + bump;
        bump *= 2.0;
    }
    return u;
}

inline void fill_bound(RobustnessReport& report, Eigen::VectorXd u, double tol) {
    report.gamma_min = u.maxCoeff();
    report.argmax_nodes = argmax_nodes(u, *report.gamma_min, tol);
    report.u = std::move(u);
}

inline void require_positive_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw Error(ErrorKind::InvalidArgument, "gamma must be positive and finite");
    }
}

} // namespace detail

/// Full report; never throws on instability (the bound fields stay empty).
inline RobustnessReport analyze(const Network& net, const AnalysisOptions& opts = {}) {
    const Stability s = stability(net, opts);
    RobustnessReport report;
    report.stable = s.stable;
    report.spectral_radius = s.spectral_radius;
    report.near_boundary = s.near_boundary;
    if (s.stable) detail::fill_bound(report, detail::certified_solution(net), opts.argmax_tolerance);
    return report;
}

/// Like analyze(), but an unstable network is an error.
inline RobustnessReport robustness_vector(const Network& net, const AnalysisOptions& opts = {}) {
    RobustnessReport report = analyze(net, opts);
    if (!report.stable) {
        throw Error(ErrorKind::Unstable, "network is not Hurwitz (spectral radius of M A^-1 = " +
                                             std::to_string(report.spectral_radius) + ")");
    }
    return report;
}

/// v > 0, (A - M) v >= 1 and v <= gamma 1, all compared exactly.
inline bool check_certificate(const Network& net, const Certificate& cert) {
    require_valid(net);
    if (static_cast<std::size_t>(cert.v.size()) != net.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "certificate has " + std::to_string(cert.v.size()) + " entries, network has " +
                        std::to_string(net.size()) + " nodes");
    }
    const Eigen::VectorXd row = detail::certificate_rows(net, cert.v);
    for (Eigen::Index i = 0; i < cert.v.size(); ++i) {
        if (!(cert.v(i) > 0.0)) return false;
        if (!(row(i) >= 1.0)) return false;
        if (!(cert.v(i) <= cert.gamma)) return false;
    }
    return true;
}

inline bool is_gamma_robust(const Network& net, double gamma, const AnalysisOptions& opts = {}) {
    detail::require_positive_gamma(gamma);
    const RobustnessReport report = analyze(net, opts);
    return report.stable && *report.gamma_min <= gamma;
}

struct WalkSum {
    /// sum_{k=1}^{K} e_t^T (M A^{-1})^k 1
    double total = 0.0;
    /// partial_sums[k-1] is the sum up to length k; nondecreasing.
    std::vector<double> partial_sums;
    /// Certified upper bound on the omitted walks of length > K.
    double tail_bound = 0.0;
    double spectral_radius = 0.0;
};

/// Truncated total weight of walks ending at `target` in the graph of
/// M A^{-1}. The full series equals u_t a_t - 1.
///
/// The tail bound uses x = (I - B/s)^{-1} 1 >= 1 for some s in (rho, 1), which
/// satisfies B x <= s x. With c = max_i (B^{K+1} 1)_i / x_i the omitted part
/// is at most c x_t / (1 - s). The best of a few s values is reported.
inline WalkSum walk_sum_oracle(const Network& net, NodeId target, std::size_t max_length,
                               const AnalysisOptions& opts = {}) {
    require_valid(net);
    require_node(net, target);
    if (max_length < 1) throw Error(ErrorKind::InvalidArgument, "max_length must be at least 1");
    const Stability s = stability(net, opts);
    if (!s.stable) throw Error(ErrorKind::Unstable, "walk sums diverge for an unstable network");

    const Eigen::MatrixXd b = scaled_adjacency(net);
    const auto t = static_cast<Eigen::Index>(target.zero_based());
    const Eigen::Index n = b.rows();

    WalkSum out;
    out.spectral_radius = s.spectral_radius;
    out.partial_sums.reserve(max_length);
    Eigen::VectorXd y = Eigen::VectorXd::Ones(n);
    for (std::size_t k = 1; k <= max_length; ++k) {
        y = b * y;
        out.total += y(t);
        out.partial_sums.push_back(out.total);
    }
    const Eigen::VectorXd next = b * y;
    if (next.maxCoeff() == 0.0) return out;

    const double rho_upper = s.estimate.upper;
    double best = std::numeric_limits<double>::infinity();
    for (double f : std::array{0.02, 0.1, 0.25, 0.5, 0.75, 0.9}) {
        const double shrink = rho_upper + (1.0 - rho_upper) * f;
        if (!(shrink > rho_upper) || !(shrink < 1.0)) continue;
        const Eigen::MatrixXd resolvent = Eigen::MatrixXd::Identity(n, n) - b / shrink;
        const Eigen::VectorXd x = resolvent.partialPivLu().solve(Eigen::VectorXd::Ones(n));
        if (!x.allFinite() || x.minCoeff() < 1.0 - 1e-9) continue;
        const double c = (next.array() / x.array()).maxCoeff();
        best = std::min(best, c * x(t) / (1.0 - shrink));
    }
    out.tail_bound = best;
    return out;
}

struct CycleRecord {
    /// Simple cycle in signal-flow order, starting at its smallest node; the
    /// closing arc back to nodes.front() is implied.
    std::vector<NodeId> nodes;
    /// Product of m_{next,prev} / a_prev along the cycle.
    double weight = 0.0;
    /// 1 / (1 - weight), infinite when weight >= 1.
    double bound = 0.0;
    /// node_passes[l] is bound <= a_{nodes[l]} * gamma.
    std::vector<bool> node_passes;
};

struct CycleViolation {
    std::size_t cycle = 0;
    NodeId node;
    double bound = 0.0;
    double limit = 0.0;  // a_i * gamma
};

struct CycleReport {
    double gamma = 0.0;
    std::vector<CycleRecord> cycles;  // sorted by length, then node sequence
    std::vector<CycleViolation> violations;

    bool passes() const { return violations.empty(); }
};

/// Necessary condition for gamma-robustness: 1/(1 - w) <= a_i gamma for every
/// simple cycle of weight w and every node i on it.
inline CycleReport cycle_small_gain(const Network& net, double gamma, const AnalysisOptions& opts = {}) {
    detail::require_positive_gamma(gamma);
    if (!stability(net, opts).stable) {
        throw Error(ErrorKind::Unstable, "cycle small-gain check requires a stable network");
    }
    const auto& a = net.self_feedback();
    CycleReport report;
    report.gamma = gamma;

    graph::simple_cycles(graph::flow_adjacency(net), opts.cycle_cap,
                         [&](const std::vector<std::size_t>& seq) {
                             CycleRecord rec;
                             rec.weight = 1.0;
                             for (std::size_t l = 0; l < seq.size(); ++l) {
                                 const std::size_t from = seq[l];
                                 const std::size_t to = seq[(l + 1) % seq.size()];
                                 rec.weight *= *net.edge_weight(NodeId::from_zero_based(to),
                                                                NodeId::from_zero_based(from)) /
                                               a[from];
                                 rec.nodes.push_back(NodeId::from_zero_based(from));
                             }
                             report.cycles.push_back(std::move(rec));
                         });

    std::sort(report.cycles.begin(), report.cycles.end(), [](const CycleRecord& x, const CycleRecord& y) {
        if (x.nodes.size() != y.nodes.size()) return x.nodes.size() < y.nodes.size();
        return x.nodes < y.nodes;
    });

    for (std::size_t c = 0; c < report.cycles.size(); ++c) {
        CycleRecord& rec = report.cycles[c];
        rec.bound = rec.weight < 1.0 ? 1.0 / (1.0 - rec.weight) : std::numeric_limits<double>::infinity();
        for (NodeId node : rec.nodes) {
            const double limit = net.self_feedback(node) * gamma;
            const bool ok = rec.bound <= limit;
            rec.node_passes.push_back(ok);
            if (!ok) report.violations.push_back({c, node, rec.bound, limit});
        }
    }
    return report;
}

} // namespace robustnet
