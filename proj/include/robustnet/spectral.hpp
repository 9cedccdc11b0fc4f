#pragma once

#include <robustnet/graph.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <vector>

namespace robustnet {

struct PowerIterationOptions {
    double relative_tolerance = 1e-12;
    std::size_t max_iterations = 100000;
};

/// Spectral radius estimate with a Collatz-Wielandt bracket
/// lower <= rho <= upper (exact arithmetic).
struct SpectralEstimate {
    double radius = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
};

namespace detail {

// Power iteration on S = B + I for an irreducible nonnegative block B, started
// from the all-ones vector. S is primitive, so the min/max ratios
// (Sx)_i / x_i squeeze onto 1 + rho(B).
inline SpectralEstimate irreducible_radius(const Eigen::MatrixXd& block,
                                           const PowerIterationOptions& opts) {
    const Eigen::Index n = block.rows();
    Eigen::MatrixXd shifted = block;
    shifted.diagonal().array() += 1.0;

    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    SpectralEstimate est;
    est.converged = false;
    for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
        const Eigen::VectorXd y = shifted * x;
        const Eigen::ArrayXd ratio = y.array() / x.array();
        const double lo = ratio.minCoeff();
        const double hi = ratio.maxCoeff();
        est.lower = lo - 1.0;
        est.upper = hi - 1.0;
        est.iterations = it;
        if (hi - lo <= opts.relative_tolerance * hi) {
            est.converged = true;
            break;
        }
        x = y / y.maxCoeff();
    }
    est.lower = std::max(est.lower, 0.0);
    est.upper = std::max(est.upper, 0.0);
    est.radius = est.converged && est.lower == est.upper ? est.lower : 0.5 * (est.lower + est.upper);
    return est;
}

} // namespace detail

/// rho(B) for a nonnegative square matrix B. Each strongly connected block is
/// handled separately; acyclic parts contribute exactly zero.
inline SpectralEstimate spectral_radius_nonnegative(const Eigen::MatrixXd& b,
                                                    const PowerIterationOptions& opts = {}) {
    const auto n = static_cast<std::size_t>(b.rows());
    graph::Adjacency adj(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            if (b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) adj[j].push_back(i);
        }
    }
    const auto comps = graph::strongly_connected_components(adj);
    std::vector<std::vector<Eigen::Index>> members(comps.count);
    for (std::size_t v = 0; v < n; ++v) members[comps.id[v]].push_back(static_cast<Eigen::Index>(v));

    SpectralEstimate total;
    for (const auto& idx : members) {
        SpectralEstimate part;
        if (idx.size() == 1) {
            const double diag = b(idx[0], idx[0]);
            part.radius = part.lower = part.upper = diag;
        } else {
            const auto k = static_cast<Eigen::Index>(idx.size());
            Eigen::MatrixXd block(k, k);
            for (Eigen::Index r = 0; r < k; ++r) {
                for (Eigen::Index c = 0; c < k; ++c) block(r, c) = b(idx[r], idx[c]);
            }
            part = detail::irreducible_radius(block, opts);
        }
        total.radius = std::max(total.radius, part.radius);
        total.lower = std::max(total.lower, part.lower);
        total.upper = std::max(total.upper, part.upper);
        total.iterations = std::max(total.iterations, part.iterations);
        total.converged = total.converged && part.converged;
    }
    return total;
}

} // namespace robustnet
