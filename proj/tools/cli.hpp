#pragma once

// robustnet command-line front end. run() takes the argument vector and the
// output streams so tests can drive it in-process.
//
// Exit codes:
//   0  success / stable / scalable / robust / witness passed
//   1  usage, parse, validation or precondition error (JSON body on stderr)
//   2  unstable network or destabilising change
//   3  not scalable / cycle violations / witness failure / final network not robust

#include <robustnet/robustnet.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace robustnet::cli {

enum class Format { Json, Csv, Human };

struct CliConfig {
    std::vector<std::string> inputs;
    std::string out_path;  // empty: stdout
    Format format = Format::Json;
    double eps_stab = 1e-9;
    double scalability_tolerance = 1e-12;
    std::size_t cycle_cap = 1'000'000;
    std::uint64_t seed = 0;
    std::optional<double> gamma;
    std::string local_cert;

    ChangeOptions change_options() const {
        ChangeOptions o;
        o.analysis.eps_stab = eps_stab;
        o.analysis.cycle_cap = cycle_cap;
        o.scalability_tolerance = scalability_tolerance;
        return o;
    }
    io::DecimalStyle style() const {
        return format == Format::Human ? io::DecimalStyle::Human : io::DecimalStyle::RoundTrip;
    }
};

namespace detail {

inline int log_level() {
    const char* env = std::getenv("ROBUSTNET_LOG");
    if (env == nullptr || *env == '\0') return 0;
    const std::string v(env);
    if (v == "debug" || v == "2") return 2;
    if (v == "0" || v == "off") return 0;
    return 1;
}

inline void log(std::ostream& err, int level, const std::string& msg) {
    if (log_level() >= level) err << "[robustnet] " << msg << "\n";
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ParseError, "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Network load_network(const std::string& path) {
    Network net = io::parse_network(read_file(path));
    require_valid(net);
    return net;
}

inline void emit(const CliConfig& cfg, std::ostream& out, const std::string& text) {
    if (cfg.out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(cfg.out_path, std::ios::binary);
    if (!file) throw Error(ErrorKind::InvalidArgument, "cannot write '" + cfg.out_path + "'");
    file << text;
}

inline void emit(const CliConfig& cfg, std::ostream& out, const io::Json& j) {
    emit(cfg, out, (cfg.format == Format::Human ? j.dump(2) : j.dump()) + "\n");
}

inline int error_exit(std::ostream& err, const std::string& kind, const std::string& message,
                      std::optional<std::size_t> step = std::nullopt) {
    io::Json body{{"error", kind}, {"message", message}};
    if (step) body["step"] = *step;
    err << body.dump() << "\n";
    return 1;
}

inline DisturbanceSignal parse_signal(const std::string& spec, const Network& net, std::uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(net.size());
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    const auto& a = net.self_feedback();
    if (kind == "ones") return DisturbanceSignal::constant(Eigen::VectorXd::Ones(n));
    if (kind == "zero") return DisturbanceSignal::constant(Eigen::VectorXd::Zero(n));
    if (kind == "constant") {
        return DisturbanceSignal::constant(Eigen::VectorXd::Constant(n, io::parse_decimal(arg, "--signal constant")));
    }
    if (kind == "random") {
        const double amp = arg.empty() ? 1.0 : io::parse_decimal(arg, "--signal random");
        return DisturbanceSignal::piecewise_random(net.size(), seed, amp, 0.5 / *std::max_element(a.begin(), a.end()));
    }
    if (kind == "worst-plus" || kind == "worst-minus") {
        const Certificate cert = default_certificate(net);
        return kind == "worst-plus" ? DisturbanceSignal::worst_case_plus(net, cert.v)
                                    : DisturbanceSignal::worst_case_minus(net, cert.v);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown --signal '" + spec + "'");
}

} // namespace detail

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exact L-infinity robustness bounds and structural-change verdicts for positive networks",
                 "robustnet"};
    app.require_subcommand(1);
    CliConfig cfg;
    std::string format = "json";
    app.add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"json", "csv", "human"}));
    app.add_option("--out", cfg.out_path, "Write output to this file instead of stdout");
    app.add_option("--eps-stab", cfg.eps_stab, "Relative margin for the rho < 1 decision")
        ->check(CLI::Range(1e-15, 1e-3));
    app.add_option("--scalability-tol", cfg.scalability_tolerance, "Relative slack on u_after <= gamma_before")
        ->check(CLI::Range(0.0, 1e-6));
    app.add_option("--cycle-cap", cfg.cycle_cap, "Maximum number of simple cycles to enumerate")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", cfg.seed, "Random seed");

    std::string net_file, change_file, out_file;
    std::string cert_file;
    double gamma = 0.0;
    std::size_t target = 0, max_len = 0, trials = 0;
    std::string signal = "ones", integrator = "rk4";
    double horizon = 50.0, step = 0.0;

    auto* analyze = app.add_subcommand("analyze", "Stability, robustness vector u and minimal gamma");
    analyze->add_option("network", net_file)->required();

    auto* check = app.add_subcommand("check", "Scalability verdict for one change");
    check->add_option("network", net_file)->required();
    check->add_option("change", change_file)->required();
    auto* check_gamma = check->add_option("--gamma", gamma, "Also report gamma-scalability at this level")
                            ->check(CLI::PositiveNumber);
    check->add_option("--local-cert", cert_file, "Certificate file for the local sufficient test");

    auto* apply_cmd = app.add_subcommand("apply", "Apply a change and write the new network");
    apply_cmd->add_option("network", net_file)->required();
    apply_cmd->add_option("change", change_file)->required();
    apply_cmd->add_option("out_file", out_file);

    auto* repair = app.add_subcommand("repair", "Self-feedback repair rendering an added edge scalable");
    repair->add_option("network", net_file)->required();
    repair->add_option("change", change_file)->required();
    repair->add_option("--local-cert", cert_file, "Certificate file (default: v = u)");

    auto* cycles = app.add_subcommand("cycles", "Cycle small-gain report");
    cycles->add_option("network", net_file)->required();
    auto* cycles_gamma = cycles->add_option("--gamma", gamma, "Robustness level (default: minimal gamma)")
                             ->check(CLI::PositiveNumber);

    auto* walks = app.add_subcommand("walks", "Truncated weighted walk sum with tail bound");
    walks->add_option("network", net_file)->required();
    walks->add_option("--target", target)->required()->check(CLI::PositiveNumber);
    walks->add_option("--max-len", max_len)->required()->check(CLI::PositiveNumber);

    auto* simulate_cmd = app.add_subcommand("simulate", "Trajectory export or randomised witness of the bound");
    simulate_cmd->add_option("network", net_file)->required();
    simulate_cmd->add_option("--signal", signal, "ones | zero | constant:<c> | random[:<amp>] | worst-plus | worst-minus");
    simulate_cmd->add_option("--horizon", horizon)->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--step", step, "Default: 1e-3 / max a_i")->check(CLI::NonNegativeNumber);
    simulate_cmd->add_option("--integrator", integrator)->check(CLI::IsMember({"rk4", "exact"}));
    simulate_cmd->add_option("--trials", trials, "Run a randomised witness with this many trials");
    auto* sim_gamma = simulate_cmd->add_option("--gamma", gamma, "Witness level (default: minimal gamma)")
                          ->check(CLI::PositiveNumber);

    auto* sequence = app.add_subcommand("sequence", "Per-step verdicts for a change script");
    sequence->add_option("network", net_file)->required();
    sequence->add_option("changes", change_file)->required();
    auto* seq_gamma = sequence->add_option("--gamma", gamma, "Final robustness level (default: minimal gamma)")
                          ->check(CLI::PositiveNumber);

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        return detail::error_exit(err, "usage", e.what());
    }
    cfg.format = format == "csv" ? Format::Csv : format == "human" ? Format::Human : Format::Json;
    const ChangeOptions opts = cfg.change_options();
    const io::DecimalStyle style = cfg.style();

    try {
        if (*analyze) {
            const Network net = detail::load_network(net_file);
            const RobustnessReport r = robustnet::analyze(net, opts.analysis);
            detail::log(err, 1, "analyze: N=" + std::to_string(net.size()) + " edges=" +
                                    std::to_string(net.edges().size()));
            if (detail::log_level() >= 2) {
                const SpectralEstimate est = stability(net, opts.analysis).estimate;
                detail::log(err, 2, "analyze: rho in [" + io::format_decimal(est.lower) + ", " +
                                        io::format_decimal(est.upper) + "] after " + std::to_string(est.iterations) +
                                        " iterations");
            }
            detail::emit(cfg, out, io::to_json(r, style));
            return r.stable ? 0 : 2;
        }
        if (*check) {
            const Network net = detail::load_network(net_file);
            const SequenceStep change = io::parse_step(detail::read_file(change_file));
            const ChangeVerdict v = verdict(net, change, opts);
            detail::log(err, 1, "check: " + io::to_json(change).dump() + " scalable=" + (v.scalable ? "true" : "false"));
            io::Json body = io::to_json(v, style);
            int code = v.scalable ? 0 : (v.stable_after ? 3 : 2);
            if (*check_gamma) {
                const bool before = v.gamma_before <= gamma;
                const bool after = v.stable_after && *v.gamma_after <= gamma;
                body["gamma"] = io::format_decimal(gamma, style);
                body["gamma_scalable"] = before && after;
                if (v.stable_after) code = before && after ? 0 : 3;
            }
            if (!cert_file.empty()) {
                const auto* edge = std::get_if<AddEdge>(&change);
                if (edge == nullptr) throw Error(ErrorKind::InvalidArgument, "--local-cert applies to add_edge only");
                body["local_check"] = sufficient_local_check(net, *edge, io::parse_certificate(detail::read_file(cert_file)));
            }
            detail::emit(cfg, out, body);
            return code;
        }
        if (*apply_cmd) {
            const Network net = detail::load_network(net_file);
            const ApplyResult r = robustnet::apply(net, io::parse_step(detail::read_file(change_file)));
            if (!out_file.empty()) cfg.out_path = out_file;
            detail::emit(cfg, out, io::serialize(r.network));
            return 0;
        }
        if (*repair) {
            const Network net = detail::load_network(net_file);
            const SequenceStep change = io::parse_step(detail::read_file(change_file));
            const auto* edge = std::get_if<AddEdge>(&change);
            if (edge == nullptr) throw Error(ErrorKind::InvalidArgument, "repair applies to add_edge changes");
            const Certificate cert = cert_file.empty() ? default_certificate(net, opts.analysis)
                                                       : io::parse_certificate(detail::read_file(cert_file));
            detail::emit(cfg, out, io::to_json(propose_repair(net, *edge, cert), style));
            return 0;
        }
        if (*cycles) {
            const Network net = detail::load_network(net_file);
            const RobustnessReport r = robustnet::analyze(net, opts.analysis);
            if (!r.stable) {
                detail::emit(cfg, out, io::to_json(r, style));
                return 2;
            }
            const CycleReport c = cycle_small_gain(net, *cycles_gamma ? gamma : *r.gamma_min, opts.analysis);
            detail::emit(cfg, out, io::to_json(c, style));
            return c.passes() ? 0 : 3;
        }
        if (*walks) {
            const Network net = detail::load_network(net_file);
            const RobustnessReport r = robustnet::analyze(net, opts.analysis);
            if (!r.stable) {
                detail::emit(cfg, out, io::to_json(r, style));
                return 2;
            }
            const WalkSum w = walk_sum_oracle(net, NodeId{target}, max_len, opts.analysis);
            detail::emit(cfg, out, io::to_json(w, NodeId{target}, max_len, style));
            return 0;
        }
        if (*simulate_cmd) {
            const Network net = detail::load_network(net_file);
            const Integrator method = integrator == "exact" ? Integrator::ExactHold : Integrator::Rk4;
            if (trials > 0) {
                const RobustnessReport r = robustnet::analyze(net, opts.analysis);
                if (!r.stable) {
                    detail::emit(cfg, out, io::to_json(r, style));
                    return 2;
                }
                WitnessOptions w;
                w.integrator = method;
                if (step > 0.0) w.step = step;
                if (simulate_cmd->count("--horizon") > 0) w.horizon = horizon;
                const WitnessReport rep = witness_bound(net, *sim_gamma ? gamma : *r.gamma_min, trials, cfg.seed, w);
                detail::emit(cfg, out, io::to_json(rep, style));
                return rep.passed ? 0 : 3;
            }
            const DisturbanceSignal d = detail::parse_signal(signal, net, cfg.seed);
            const double h = step > 0.0 ? step : default_step(net);
            const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.size()));
            const Trajectory traj = robustnet::simulate(net, d, x0, horizon, h, {method, true});
            if (cfg.format == Format::Csv || app.count("--format") == 0) {
                std::ostringstream csv;
                write_csv(csv, traj);
                detail::emit(cfg, out, csv.str());
            } else {
                detail::emit(cfg, out,
                             io::Json{{"steps", traj.times.size() - 1},
                                      {"step", io::format_decimal(traj.step, style)},
                                      {"final_state", io::detail::decimals(traj.final_state, style)},
                                      {"peak", io::detail::decimals(traj.peak, style)},
                                      {"global_peak", io::format_decimal(traj.global_peak, style)}});
            }
            return 0;
        }
        if (*sequence) {
            const Network net = detail::load_network(net_file);
            const auto steps = io::parse_sequence(detail::read_file(change_file));
            const double level = *seq_gamma ? gamma : *robustness_vector(net, opts.analysis).gamma_min;
            const SequenceReport r = check_sequence(net, steps, level, opts);
            detail::log(err, 1, "sequence: " + std::to_string(r.steps.size()) + " of " + std::to_string(steps.size()) +
                                    " steps run at gamma " + io::format_decimal(level));
            detail::emit(cfg, out, io::to_json(r, style));
            if (r.halted_at) return 2;
            return r.final_robust ? 0 : 3;
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Unstable && !e.step()) {
            return (detail::error_exit(err, std::string(to_string(e.kind())), e.what()), 2);
        }
        return detail::error_exit(err, std::string(to_string(e.kind())), e.what(), e.step());
    } catch (const std::exception& e) {
        return detail::error_exit(err, "internal", e.what());
    }
    return 1;
}

} // namespace robustnet::cli
