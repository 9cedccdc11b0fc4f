#include "support/fixtures.hpp"
#include "support/random_networks.hpp"

#include <catch2/catch.hpp>

using namespace robustnet;
using robustnet::io::Json;

namespace {

ErrorKind parse_kind(const std::string& text) {
    try {
        io::parse_network(text);
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::InvalidArgument;
}

} // namespace

TEST_CASE("decimal formatting", "[io]") {
    CHECK(io::format_decimal(4.0) == "4");
    CHECK(io::format_decimal(0.3) == "0.3");
    CHECK(io::format_decimal(0.1 + 0.2) == "0.30000000000000004");
    CHECK(io::format_decimal(1.0 / 3.0, io::DecimalStyle::Human) == "0.333333");
    CHECK(io::parse_decimal("1e-3", "x") == 0.001);
    CHECK_THROWS_AS(io::parse_decimal("1.0abc", "x"), Error);
    CHECK_THROWS_AS(io::parse_decimal("", "x"), Error);
}

TEST_CASE("decimal strings round-trip every double", "[io]") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::uint64_t> bits;
    for (int k = 0; k < 20000; ++k) {
        double x;
        const std::uint64_t b = bits(rng);
        std::memcpy(&x, &b, sizeof x);
        if (!std::isfinite(x)) continue;
        const std::string s = io::format_decimal(x);
        CHECK(s.size() <= 24);
        CHECK(io::parse_decimal(s, "x") == x);
    }
}

TEST_CASE("network files parse and serialise", "[io]") {
    const std::string text = R"({"nodes":[{"id":2,"a":"1"},{"id":1,"a":"0.5"}],
                                 "edges":[{"from":1,"to":2,"weight":"0.25"}]})";
    const Network net = io::parse_network(text);
    CHECK(net == Network({0.5, 1.0}, fixtures::edges({{2, 1, 0.25}})));
    CHECK(io::parse_network(io::serialize(net)) == net);
    CHECK(io::parse_network(R"({"nodes":[{"id":1,"a":"2"}]})").edges().empty());
}

TEST_CASE("network files: malformed input is a parse error", "[io]") {
    CHECK(parse_kind("{") == ErrorKind::ParseError);
    CHECK(parse_kind(R"({"nodes":[]})") == ErrorKind::ParseError);
    CHECK(parse_kind(R"({"nodes":[{"id":1,"a":1.0}]})") == ErrorKind::ParseError);
    CHECK(parse_kind(R"({"nodes":[{"id":1,"a":"1"},{"id":1,"a":"1"}]})") == ErrorKind::ParseError);
    CHECK(parse_kind(R"({"nodes":[{"id":3,"a":"1"}]})") == ErrorKind::ParseError);
    CHECK(parse_kind(R"({"nodes":[{"id":1,"a":"1"}],"extra":1})") == ErrorKind::ParseError);
    CHECK(parse_kind(R"({"nodes":[{"id":1,"a":"1"},{"id":2,"a":"1"}],
                        "edges":[{"from":1,"to":2,"weight":"1"},{"from":1,"to":2,"weight":"2"}]})") ==
          ErrorKind::ParseError);
    CHECK(parse_kind(R"({"nodes":[{"id":0,"a":"1"}]})") == ErrorKind::ParseError);
}

TEST_CASE("random networks survive a serialise/parse round trip bit for bit", "[io]") {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 100; ++k) {
        const Network net = gen::stable_network(rng, {});
        CHECK(io::parse_network(io::serialize(net)) == net);
    }
}

TEST_CASE("change files", "[io]") {
    CHECK(io::parse_step(R"({"op":"add_edge","to":4,"from":2,"weight":"0.1"})") ==
          SequenceStep{AddEdge{NodeId{4}, NodeId{2}, 0.1}});
    CHECK(io::parse_step(R"({"op":"add_node","a":"0.25"})") == SequenceStep{AddNode{0.25}});
    CHECK(io::parse_step(R"({"op":"remove_node","node":4})") == SequenceStep{RemoveNode{NodeId{4}}});
    CHECK(io::parse_step(R"({"op":"remove_edge","to":3,"from":2})") == SequenceStep{RemoveEdge{NodeId{3}, NodeId{2}}});
    CHECK(io::parse_step(R"({"op":"repair","node":4,"a_new":"0.3"})") ==
          SequenceStep{RaiseSelfFeedback{NodeId{4}, 0.3}});
    CHECK_THROWS_AS(io::parse_step(R"({"op":"teleport"})"), Error);
    CHECK_THROWS_AS(io::parse_step(R"({"op":"add_node"})"), Error);

    const std::vector<SequenceStep> seq{AddNode{0.25}, AddEdge{NodeId{4}, NodeId{2}, 0.1},
                                        RemoveNodeCascade{NodeId{1}}, RaiseSelfFeedback{NodeId{2}, 3.5}};
    Json arr = Json::array();
    for (const auto& s : seq) arr.push_back(io::to_json(s));
    CHECK(io::parse_sequence(arr.dump()) == seq);
    CHECK_THROWS_AS(io::parse_sequence("{}"), Error);
}

TEST_CASE("certificate files", "[io]") {
    const Certificate c = io::parse_certificate(R"({"v":["1","2","4","4"],"gamma":"4"})");
    CHECK(c.v.size() == 4);
    CHECK(c.gamma == 4.0);
    CHECK(io::to_json(c).dump() == R"({"v":["1","2","4","4"],"gamma":"4"})");
    CHECK_THROWS_AS(io::parse_certificate(R"({"v":[1],"gamma":"4"})"), Error);
}

TEST_CASE("report serialisation", "[io]") {
    const RobustnessReport r = analyze(fixtures::three_node());
    CHECK(io::to_json(r).dump() ==
          R"({"stable":true,"spectral_radius":"0","near_boundary":false,"u":["1","2","4"],"gamma":"4","argmax":[3]})");
    const Json unstable = io::to_json(analyze(fixtures::two_cycle(1, 1, 1, 1)));
    CHECK_FALSE(unstable.contains("u"));
    CHECK(unstable["spectral_radius"] == "1");

    const ChangeVerdict v = verdict(fixtures::four_node(), SequenceStep{AddEdge{NodeId{4}, NodeId{2}, 0.1}});
    const Json j = io::to_json(v);
    CHECK(j["gamma_after"] == "4.8");
    CHECK(j["repair"]["a_new"] == "0.3");
}
