#pragma once

// JSON file formats and report serialisation. All reals travel as decimal
// strings; the exact style is the shortest string that parses back to the
// same double.

#include <robustnet/analysis.hpp>
#include <robustnet/changes.hpp>
#include <robustnet/error.hpp>
#include <robustnet/network.hpp>
#include <robustnet/simulation.hpp>

#include <json.hpp>

#include <charconv>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace robustnet::io {

using Json = nlohmann::ordered_json;

enum class DecimalStyle {
    RoundTrip,  // shortest representation that round-trips (at most 17 digits)
    Human,      // 6 significant digits
};

inline std::string format_decimal(double x, DecimalStyle style = DecimalStyle::RoundTrip) {
    char buf[64];
    const auto res = style == DecimalStyle::RoundTrip
                         ? std::to_chars(buf, buf + sizeof buf, x)
                         : std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 6);
    return std::string(buf, res.ptr);
}

inline double parse_decimal(std::string_view text, std::string_view what) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw Error(ErrorKind::ParseError, std::string(what) + ": '" + std::string(text) + "' is not a decimal number");
    }
    return value;
}

namespace detail {

[[noreturn]] inline void fail(const std::string& msg) { throw Error(ErrorKind::ParseError, msg); }

inline void require_object(const Json& j, std::string_view what, std::initializer_list<std::string_view> required,
                           std::initializer_list<std::string_view> optional = {}) {
    if (!j.is_object()) fail(std::string(what) + " must be a JSON object");
    for (auto key : required) {
        if (!j.contains(std::string(key))) fail(std::string(what) + " is missing key '" + std::string(key) + "'");
    }
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto k : required) known = known || key == k;
        for (auto k : optional) known = known || key == k;
        if (!known) fail(std::string(what) + " has unknown key '" + key + "'");
    }
}

inline double decimal_field(const Json& j, const char* key, std::string_view what) {
    const Json& v = j.at(key);
    if (!v.is_string()) fail(std::string(what) + "." + key + " must be a decimal string");
    return parse_decimal(v.get<std::string>(), std::string(what) + "." + key);
}

inline NodeId node_field(const Json& j, const char* key, std::string_view what) {
    const Json& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
        fail(std::string(what) + "." + key + " must be a positive integer node id");
    }
    return NodeId{v.get<std::size_t>()};
}

inline Json decimals(const Eigen::VectorXd& v, DecimalStyle style) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(format_decimal(v(i), style));
    return arr;
}

inline Json node_ids(const std::vector<NodeId>& ids) {
    Json arr = Json::array();
    for (NodeId id : ids) arr.push_back(id.value);
    return arr;
}

inline Json parse_text(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("malformed JSON: ") + e.what());
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Network files
// ---------------------------------------------------------------------------

inline Network network_from_json(const Json& j) {
    detail::require_object(j, "network", {"nodes"}, {"edges"});
    const Json& nodes = j.at("nodes");
    if (!nodes.is_array() || nodes.empty()) detail::fail("network.nodes must be a non-empty array");

    std::vector<std::optional<double>> a(nodes.size());
    for (const Json& node : nodes) {
        detail::require_object(node, "node", {"id", "a"});
        const NodeId id = detail::node_field(node, "id", "node");
        if (id.value > nodes.size()) detail::fail("node ids must be exactly 1.." + std::to_string(nodes.size()));
        if (a[id.zero_based()]) detail::fail("duplicate node id " + std::to_string(id.value));
        a[id.zero_based()] = detail::decimal_field(node, "a", "node");
    }
    std::vector<double> rates;
    for (const auto& v : a) rates.push_back(*v);

    EdgeMap edges;
    if (j.contains("edges")) {
        const Json& list = j.at("edges");
        if (!list.is_array()) detail::fail("network.edges must be an array");
        for (const Json& e : list) {
            detail::require_object(e, "edge", {"from", "to", "weight"});
            const EdgeKey key{detail::node_field(e, "to", "edge"), detail::node_field(e, "from", "edge")};
            if (!edges.emplace(key, detail::decimal_field(e, "weight", "edge")).second) {
                detail::fail("duplicate edge to=" + std::to_string(key.to.value) +
                             " from=" + std::to_string(key.from.value));
            }
        }
    }
    return Network(std::move(rates), std::move(edges));
}

inline Network parse_network(std::string_view text) { return network_from_json(detail::parse_text(text)); }

inline Json to_json(const Network& net) {
    Json nodes = Json::array();
    for (std::size_t k = 0; k < net.size(); ++k) {
        nodes.push_back({{"id", k + 1}, {"a", format_decimal(net.self_feedback()[k])}});
    }
    Json edges = Json::array();
    for (const auto& [key, w] : net.edges()) {
        edges.push_back({{"from", key.from.value}, {"to", key.to.value}, {"weight", format_decimal(w)}});
    }
    return Json{{"nodes", nodes}, {"edges", edges}};
}

inline std::string serialize(const Network& net) { return to_json(net).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Changes, sequences and certificates
// ---------------------------------------------------------------------------

inline SequenceStep step_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("op") || !j.at("op").is_string()) {
        detail::fail("change must be an object with a string 'op'");
    }
    const std::string op = j.at("op").get<std::string>();
    if (op == "add_edge") {
        detail::require_object(j, "add_edge", {"op", "to", "from", "weight"});
        return AddEdge{detail::node_field(j, "to", op), detail::node_field(j, "from", op),
                       detail::decimal_field(j, "weight", op)};
    }
    if (op == "add_node") {
        detail::require_object(j, "add_node", {"op", "a"});
        return AddNode{detail::decimal_field(j, "a", op)};
    }
    if (op == "remove_node") {
        detail::require_object(j, "remove_node", {"op", "node"});
        return RemoveNode{detail::node_field(j, "node", op)};
    }
    if (op == "remove_edge") {
        detail::require_object(j, "remove_edge", {"op", "to", "from"});
        return RemoveEdge{detail::node_field(j, "to", op), detail::node_field(j, "from", op)};
    }
    if (op == "remove_node_cascade") {
        detail::require_object(j, "remove_node_cascade", {"op", "node"});
        return RemoveNodeCascade{detail::node_field(j, "node", op)};
    }
    if (op == "repair") {
        detail::require_object(j, "repair", {"op", "node", "a_new"});
        return RaiseSelfFeedback{detail::node_field(j, "node", op), detail::decimal_field(j, "a_new", op)};
    }
    detail::fail("unknown change op '" + op + "'");
}

inline SequenceStep parse_step(std::string_view text) { return step_from_json(detail::parse_text(text)); }

inline std::vector<SequenceStep> parse_sequence(std::string_view text) {
    const Json j = detail::parse_text(text);
    if (!j.is_array()) detail::fail("a change sequence must be a JSON array");
    std::vector<SequenceStep> out;
    for (const Json& step : j) out.push_back(step_from_json(step));
    return out;
}

inline Json to_json(const SequenceStep& step) {
    return std::visit(
        [](const auto& c) -> Json {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, AddEdge>) {
                return {{"op", "add_edge"}, {"to", c.to.value}, {"from", c.from.value}, {"weight", format_decimal(c.weight)}};
            } else if constexpr (std::is_same_v<T, AddNode>) {
                return {{"op", "add_node"}, {"a", format_decimal(c.a_new)}};
            } else if constexpr (std::is_same_v<T, RemoveNode>) {
                return {{"op", "remove_node"}, {"node", c.node.value}};
            } else if constexpr (std::is_same_v<T, RemoveEdge>) {
                return {{"op", "remove_edge"}, {"to", c.to.value}, {"from", c.from.value}};
            } else if constexpr (std::is_same_v<T, RemoveNodeCascade>) {
                return {{"op", "remove_node_cascade"}, {"node", c.node.value}};
            } else {
                return {{"op", "repair"}, {"node", c.node.value}, {"a_new", format_decimal(c.a_new)}};
            }
        },
        step);
}

inline Certificate parse_certificate(std::string_view text) {
    const Json j = detail::parse_text(text);
    detail::require_object(j, "certificate", {"v", "gamma"});
    const Json& v = j.at("v");
    if (!v.is_array() || v.empty()) detail::fail("certificate.v must be a non-empty array");
    Certificate cert;
    cert.v.resize(static_cast<Eigen::Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!v[k].is_string()) detail::fail("certificate.v entries must be decimal strings");
        cert.v(static_cast<Eigen::Index>(k)) = parse_decimal(v[k].get<std::string>(), "certificate.v");
    }
    cert.gamma = detail::decimal_field(j, "gamma", "certificate");
    return cert;
}

inline Json to_json(const Certificate& cert, DecimalStyle style = DecimalStyle::RoundTrip) {
    return {{"v", detail::decimals(cert.v, style)}, {"gamma", format_decimal(cert.gamma, style)}};
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline Json to_json(const RobustnessReport& r, DecimalStyle style = DecimalStyle::RoundTrip) {
    Json j{{"stable", r.stable},
           {"spectral_radius", format_decimal(r.spectral_radius, style)},
           {"near_boundary", r.near_boundary}};
    if (r.stable) {
        j["u"] = detail::decimals(r.u, style);
        j["gamma"] = format_decimal(*r.gamma_min, style);
        j["argmax"] = detail::node_ids(r.argmax_nodes);
    }
    return j;
}

inline Json to_json(const SelfFeedbackRepair& r, DecimalStyle style = DecimalStyle::RoundTrip) {
    return {{"node", r.node.value}, {"a_old", format_decimal(r.a_old, style)}, {"a_new", format_decimal(r.a_new, style)}};
}

inline Json to_json(const ChangeVerdict& v, DecimalStyle style = DecimalStyle::RoundTrip) {
    Json j{{"scalable", v.scalable},
           {"stable_after", v.stable_after},
           {"gamma_before", format_decimal(v.gamma_before, style)}};
    if (v.gamma_after) j["gamma_after"] = format_decimal(*v.gamma_after, style);
    j["u_before"] = detail::decimals(v.u_before, style);
    j["u_after"] = detail::decimals(v.u_after, style);
    j["performance_loss"] = detail::decimals(v.performance_loss, style);
    if (v.add_edge) {
        const AddEdgeDetail& d = *v.add_edge;
        j["add_edge"] = {{"walk_gain", format_decimal(d.walk_gain, style)},
                         {"loop_gain", format_decimal(d.loop_gain, style)},
                         {"path_to_argmax", d.path_to_argmax},
                         {"within_bound", d.within_bound},
                         {"lower_bound", format_decimal(d.lower_bound, style)}};
    }
    if (v.repair) j["repair"] = to_json(*v.repair, style);
    if (v.direct_discrepancy) j["direct_discrepancy"] = format_decimal(*v.direct_discrepancy, style);
    return j;
}

inline Json to_json(const CycleReport& r, DecimalStyle style = DecimalStyle::RoundTrip) {
    Json cycles = Json::array();
    for (const auto& c : r.cycles) {
        Json passes = Json::array();
        for (bool p : c.node_passes) passes.push_back(p);
        cycles.push_back({{"nodes", detail::node_ids(c.nodes)},
                          {"weight", format_decimal(c.weight, style)},
                          {"bound", format_decimal(c.bound, style)},
                          {"passes", passes}});
    }
    Json violations = Json::array();
    for (const auto& v : r.violations) {
        violations.push_back({{"cycle", v.cycle},
                              {"node", v.node.value},
                              {"bound", format_decimal(v.bound, style)},
                              {"limit", format_decimal(v.limit, style)}});
    }
    return {{"gamma", format_decimal(r.gamma, style)},
            {"passes", r.passes()},
            {"cycles", cycles},
            {"violations", violations}};
}

inline Json to_json(const WalkSum& w, NodeId target, std::size_t max_length,
                    DecimalStyle style = DecimalStyle::RoundTrip) {
    Json partial = Json::array();
    for (double s : w.partial_sums) partial.push_back(format_decimal(s, style));
    return {{"target", target.value},
            {"max_length", max_length},
            {"sum", format_decimal(w.total, style)},
            {"tail_bound", format_decimal(w.tail_bound, style)},
            {"spectral_radius", format_decimal(w.spectral_radius, style)},
            {"partial_sums", partial}};
}

inline Json to_json(const WitnessReport& r, DecimalStyle style = DecimalStyle::RoundTrip) {
    Json trials = Json::array();
    for (const auto& t : r.trials) {
        trials.push_back({{"trial", t.index},
                          {"seed", t.seed},
                          {"peak", format_decimal(t.peak, style)},
                          {"ratio", format_decimal(t.ratio, style)}});
    }
    return {{"gamma", format_decimal(r.gamma, style)},
            {"amplitude", format_decimal(r.amplitude, style)},
            {"horizon", format_decimal(r.horizon, style)},
            {"step", format_decimal(r.step, style)},
            {"max_ratio", format_decimal(r.max_ratio, style)},
            {"passed", r.passed},
            {"trials", trials}};
}

inline Json to_json(const SequenceReport& r, DecimalStyle style = DecimalStyle::RoundTrip) {
    Json steps = Json::array();
    for (const auto& s : r.steps) {
        Json map = Json::array();
        for (const auto& m : s.index_map) map.push_back(m ? Json(m->value) : Json(nullptr));
        steps.push_back({{"index", s.index}, {"change", to_json(s.step)}, {"verdict", to_json(s.verdict, style)},
                         {"index_map", map}});
    }
    return {{"gamma", format_decimal(r.gamma, style)},
            {"initial", to_json(r.initial, style)},
            {"steps", steps},
            {"all_scalable", r.all_scalable()},
            {"halted_at", r.halted_at ? Json(*r.halted_at) : Json(nullptr)},
            {"final", to_json(r.final_report, style)},
            {"final_robust", r.final_robust},
            {"final_network", to_json(r.final_network)}};
}

} // namespace robustnet::io
