#pragma once

// Trajectories of x' = -(A - M) x + d under bounded disturbances.
//
// Inputs are sampled at the start of every step and held for the step
// (zero-order hold), so the exact discrete map below is exact for the
// simulated input and serves as the reference for the RK4 integrator.

#include <robustnet/analysis.hpp>
#include <robustnet/error.hpp>
#include <robustnet/network.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace robustnet {

class DisturbanceSignal {
public:
    enum class Kind { Constant, WorstCasePlus, WorstCaseMinus, PiecewiseRandom, UserSamples };

    static DisturbanceSignal constant(Eigen::VectorXd value) {
        DisturbanceSignal s(Kind::Constant, value.size());
        s.amplitude_ = value.cwiseAbs();
        s.value_ = std::move(value);
        return s;
    }

    /// d = (A - M) v: keeps the state at v when started there.
    static DisturbanceSignal worst_case_plus(const Network& net, const Eigen::VectorXd& v) {
        DisturbanceSignal s = constant(system_matrix(net) * v);
        s.kind_ = Kind::WorstCasePlus;
        return s;
    }

    static DisturbanceSignal worst_case_minus(const Network& net, const Eigen::VectorXd& v) {
        DisturbanceSignal s = constant(-(system_matrix(net) * v));
        s.kind_ = Kind::WorstCaseMinus;
        return s;
    }

    /// Piecewise constant over intervals of length `dwell`; every entry is
    /// i.i.d. uniform in [-amplitude, amplitude]. Interval k is drawn from a
    /// generator seeded with (seed, k), so values do not depend on call order.
    static DisturbanceSignal piecewise_random(std::size_t dimension, std::uint64_t seed, double amplitude,
                                              double dwell) {
        if (!(amplitude >= 0.0) || !(dwell > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "random disturbance needs amplitude >= 0 and dwell > 0");
        }
        DisturbanceSignal s(Kind::PiecewiseRandom, static_cast<Eigen::Index>(dimension));
        s.amplitude_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dimension), amplitude);
        s.random_amplitude_ = amplitude;
        s.seed_ = seed;
        s.dwell_ = dwell;
        return s;
    }

    /// Zero-order hold through the samples; before times.front() the first
    /// sample applies.
    static DisturbanceSignal samples(std::vector<double> times, std::vector<Eigen::VectorXd> values) {
        if (times.empty() || times.size() != values.size()) {
            throw Error(ErrorKind::InvalidArgument, "sample times and values must be non-empty and equal in length");
        }
        if (!std::is_sorted(times.begin(), times.end()) ||
            std::adjacent_find(times.begin(), times.end()) != times.end()) {
            throw Error(ErrorKind::InvalidArgument, "sample times must be strictly increasing");
        }
        const Eigen::Index n = values.front().size();
        DisturbanceSignal s(Kind::UserSamples, n);
        s.amplitude_ = Eigen::VectorXd::Zero(n);
        for (const auto& v : values) {
            if (v.size() != n) throw Error(ErrorKind::DimensionMismatch, "samples differ in dimension");
            s.amplitude_ = s.amplitude_.cwiseMax(v.cwiseAbs());
        }
        s.times_ = std::move(times);
        s.values_ = std::move(values);
        return s;
    }

    Kind kind() const { return kind_; }
    Eigen::Index dimension() const { return dimension_; }
    /// Per-node bound on |d_i(t)|.
    const Eigen::VectorXd& amplitude() const { return amplitude_; }
    double max_amplitude() const { return amplitude_.size() ? amplitude_.maxCoeff() : 0.0; }

    /// Identifies the constant piece containing t; equal ids mean equal values.
    std::int64_t piece(double t) const {
        switch (kind_) {
            case Kind::PiecewiseRandom: return static_cast<std::int64_t>(std::floor(t / dwell_));
            case Kind::UserSamples: {
                auto it = std::upper_bound(times_.begin(), times_.end(), t);
                return std::max<std::int64_t>(0, static_cast<std::int64_t>(it - times_.begin()) - 1);
            }
            default: return 0;
        }
    }

    Eigen::VectorXd at(double t) const {
        switch (kind_) {
            case Kind::PiecewiseRandom: return random_piece(piece(t));
            case Kind::UserSamples: return values_[static_cast<std::size_t>(piece(t))];
            default: return value_;
        }
    }

    DisturbanceSignal scaled(double alpha) const {
        DisturbanceSignal s = *this;
        s.value_ *= alpha;
        s.amplitude_ *= std::abs(alpha);
        for (auto& v : s.values_) v *= alpha;
        s.scale_ *= alpha;
        return s;
    }

private:
    DisturbanceSignal(Kind kind, Eigen::Index dimension) : kind_(kind), dimension_(dimension) {}

    Eigen::VectorXd random_piece(std::int64_t k) const {
        std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                          static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(static_cast<std::uint64_t>(k) >> 32)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> dist(-random_amplitude_, random_amplitude_);
        Eigen::VectorXd d(dimension_);
        for (Eigen::Index i = 0; i < dimension_; ++i) d(i) = scale_ * dist(rng);
        return d;
    }

    Kind kind_;
    Eigen::Index dimension_;
    Eigen::VectorXd amplitude_;
    Eigen::VectorXd value_;
    double random_amplitude_ = 0.0;
    std::uint64_t seed_ = 0;
    double dwell_ = 1.0;
    double scale_ = 1.0;
    std::vector<double> times_;
    std::vector<Eigen::VectorXd> values_;
};

enum class Integrator {
    /// Classical fixed-step 4th-order Runge-Kutta.
    Rk4,
    /// x_{k+1} = e^{-Kh} x_k + (integral_0^h e^{-Ks} ds) d_k, exact under the hold.
    ExactHold,
};

struct SimulationOptions {
    Integrator integrator = Integrator::Rk4;
    /// Keep the full state and input history; peaks are tracked regardless.
    bool record = true;
};

struct Trajectory {
    std::vector<double> times;
    Eigen::MatrixXd states;  // row k is x(t_k)
    Eigen::MatrixXd inputs;  // row k is the input held on [t_k, t_{k+1})
    Eigen::VectorXd peak;    // max_k |x_i(t_k)|
    double global_peak = 0.0;
    Eigen::VectorXd final_state;
    double step = 0.0;
};

/// Default step: 1e-3 of the fastest time constant 1 / max_i a_i.
inline double default_step(const Network& net) {
    const auto& a = net.self_feedback();
    return 1e-3 / *std::max_element(a.begin(), a.end());
}

namespace detail {

class Stepper {
public:
    Stepper(const Network& net, double h, Integrator method) : k_(system_matrix(net)), h_(h), method_(method) {
        if (method_ == Integrator::ExactHold) {
            const Eigen::Index n = k_.rows();
            Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(2 * n, 2 * n);
            aug.topLeftCorner(n, n) = -k_ * h;
            aug.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n) * h;
            const Eigen::MatrixXd e = aug.exp();
            phi_ = e.topLeftCorner(n, n);
            gamma_ = e.topRightCorner(n, n);
        }
    }

    void advance(Eigen::VectorXd& x, const Eigen::VectorXd& d) const {
        if (method_ == Integrator::ExactHold) {
            x = phi_ * x + gamma_ * d;
            return;
        }
        const Eigen::VectorXd k1 = d - k_ * x;
        const Eigen::VectorXd k2 = d - k_ * (x + 0.5 * h_ * k1);
        const Eigen::VectorXd k3 = d - k_ * (x + 0.5 * h_ * k2);
        const Eigen::VectorXd k4 = d - k_ * (x + h_ * k3);
        x += (h_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

private:
    Eigen::MatrixXd k_;
    double h_;
    Integrator method_;
    Eigen::MatrixXd phi_;
    Eigen::MatrixXd gamma_;
};

inline std::size_t step_count(double horizon, double step) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / step - 1e-9)));
}

} // namespace detail

/// Integrates on the uniform grid t_k = k * step up to the first grid point
/// at or beyond `horizon`. Throws NonFiniteState on overflow.
inline Trajectory simulate(const Network& net, const DisturbanceSignal& d, const Eigen::VectorXd& x0, double horizon,
                           double step, const SimulationOptions& opts = {}) {
    require_valid(net);
    const auto n = static_cast<Eigen::Index>(net.size());
    if (d.dimension() != n || x0.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "disturbance and initial state must match the network size");
    }
    if (!(step > 0.0) || !(horizon > 0.0) || !std::isfinite(horizon)) {
        throw Error(ErrorKind::InvalidArgument, "step and horizon must be positive");
    }

    const std::size_t steps = detail::step_count(horizon, step);
    const detail::Stepper stepper(net, step, opts.integrator);

    Trajectory traj;
    traj.step = step;
    if (opts.record) {
        traj.times.reserve(steps + 1);
        traj.states.resize(static_cast<Eigen::Index>(steps + 1), n);
        traj.inputs.resize(static_cast<Eigen::Index>(steps + 1), n);
    }
    Eigen::VectorXd x = x0;
    traj.peak = x.cwiseAbs();

    std::int64_t piece = d.piece(0.0);
    Eigen::VectorXd input = d.at(0.0);
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * step;
        const std::int64_t now = d.piece(t);
        if (now != piece) {
            piece = now;
            input = d.at(t);
        }
        if (opts.record) {
            traj.times.push_back(t);
            traj.states.row(static_cast<Eigen::Index>(k)) = x.transpose();
            traj.inputs.row(static_cast<Eigen::Index>(k)) = input.transpose();
        }
        if (k == steps) break;
        stepper.advance(x, input);
        if (!x.allFinite()) {
            throw Error(ErrorKind::NonFiniteState, "state became non-finite at t = " + std::to_string(t + step));
        }
        traj.peak = traj.peak.cwiseMax(x.cwiseAbs());
    }
    traj.final_state = x;
    traj.global_peak = traj.peak.maxCoeff();
    return traj;
}

inline void write_csv(std::ostream& os, const Trajectory& traj) {
    const Eigen::Index n = traj.states.cols();
    os << "t";
    for (Eigen::Index i = 1; i <= n; ++i) os << ",x" << i;
    for (Eigen::Index i = 1; i <= n; ++i) os << ",d" << i;
    os << "\n";
    os.precision(17);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        os << traj.times[k];
        for (Eigen::Index i = 0; i < n; ++i) os << "," << traj.states(r, i);
        for (Eigen::Index i = 0; i < n; ++i) os << "," << traj.inputs(r, i);
        os << "\n";
    }
}

struct WitnessOptions {
    double amplitude = 1.0;
    /// 0 selects 20 * gamma, which bounds 20 slowest time constants of A - M.
    double horizon = 0.0;
    /// 0 selects dwell / 25.
    double step = 0.0;
    /// 0 selects 1 / (2 max_i a_i).
    double dwell = 0.0;
    Integrator integrator = Integrator::ExactHold;
    /// Relative slack allowed on top of gamma before a trial counts as a failure.
    double tolerance = 1e-4;
};

struct WitnessTrial {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    double peak = 0.0;
    double ratio = 0.0;  // peak / amplitude
};

struct WitnessReport {
    double gamma = 0.0;
    double amplitude = 0.0;
    double horizon = 0.0;
    double step = 0.0;
    std::vector<WitnessTrial> trials;
    double max_ratio = 0.0;
    /// No trial exceeded gamma * (1 + tolerance).
    bool passed = true;
};

/// Seed of trial `index`, derived only from (seed, index).
inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// Randomised bounded-disturbance runs from x0 = 0. Requires the network to be
/// gamma-robust; a trial with peak / amplitude above gamma (1 + tolerance)
/// falsifies either the analysis or the integrator and fails the report.
inline WitnessReport witness_bound(const Network& net, double gamma, std::size_t trials, std::uint64_t seed,
                                   const WitnessOptions& opts = {}) {
    if (!is_gamma_robust(net, gamma)) {
        throw Error(ErrorKind::PreconditionViolated, "network is not gamma-robust at gamma = " + std::to_string(gamma));
    }
    if (!(opts.amplitude > 0.0)) throw Error(ErrorKind::InvalidArgument, "amplitude must be positive");
    const auto& a = net.self_feedback();
    const double dwell = opts.dwell > 0.0 ? opts.dwell : 0.5 / *std::max_element(a.begin(), a.end());

    WitnessReport report;
    report.gamma = gamma;
    report.amplitude = opts.amplitude;
    report.horizon = opts.horizon > 0.0 ? opts.horizon : 20.0 * gamma;
    report.step = opts.step > 0.0 ? opts.step : dwell / 25.0;

    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.size()));
    const SimulationOptions sim{opts.integrator, false};
    for (std::size_t t = 0; t < trials; ++t) {
        WitnessTrial trial;
        trial.index = t;
        trial.seed = trial_seed(seed, t);
        const auto d = DisturbanceSignal::piecewise_random(net.size(), trial.seed, opts.amplitude, dwell);
        trial.peak = simulate(net, d, x0, report.horizon, report.step, sim).global_peak;
        trial.ratio = trial.peak / opts.amplitude;
        report.max_ratio = std::max(report.max_ratio, trial.ratio);
        if (trial.ratio > gamma * (1.0 + opts.tolerance)) report.passed = false;
        report.trials.push_back(trial);
    }
    return report;
}

/// True iff x_low(t_k) <= x_high(t_k) + tolerance at every grid point. Both
/// runs use the same grid; the ordering of the inputs is checked on it.
inline bool monotonicity_probe(const Network& net, const DisturbanceSignal& d_low, const DisturbanceSignal& d_high,
                               const Eigen::VectorXd& x0_low, const Eigen::VectorXd& x0_high, double horizon,
                               double step, Integrator integrator = Integrator::ExactHold,
                               double tolerance = 1e-9) {
    if ((x0_low.array() > x0_high.array()).any()) {
        throw Error(ErrorKind::PreconditionViolated, "x0_low must not exceed x0_high");
    }
    const SimulationOptions sim{integrator, true};
    const Trajectory low = simulate(net, d_low, x0_low, horizon, step, sim);
    const Trajectory high = simulate(net, d_high, x0_high, horizon, step, sim);
    if ((low.inputs.array() > high.inputs.array()).any()) {
        throw Error(ErrorKind::PreconditionViolated, "d_low exceeds d_high on the sampling grid");
    }
    const double scale = 1.0 + std::max(low.peak.maxCoeff(), high.peak.maxCoeff());
    return (low.states.array() <= high.states.array() + tolerance * scale).all();
}

} // namespace robustnet
