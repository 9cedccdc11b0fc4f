#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/random_networks.hpp"

#include <catch2/catch.hpp>

using namespace robustnet;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index k = 0;
    for (double x : xs) v(k++) = x;
    return v;
}

template <typename F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no robustnet::Error thrown");
    return ErrorKind::InvalidArgument;
}

} // namespace

TEST_CASE("apply: node and edge additions", "[changes][apply]") {
    const ApplyResult grown = robustnet::apply(fixtures::three_node(), AddNode{0.25});
    CHECK(grown.network == fixtures::four_node());
    CHECK(weighted_adjacency(grown.network).row(3).isZero());
    CHECK(weighted_adjacency(grown.network).col(3).isZero());

    const ApplyResult linked = robustnet::apply(fixtures::four_node(), AddEdge{NodeId{4}, NodeId{2}, 0.1});
    CHECK(linked.network.edge_weight(NodeId{4}, NodeId{2}) == 0.1);
    CHECK(linked.network.edges().size() == 4);
}

TEST_CASE("apply: preconditions", "[changes][apply]") {
    const Network net = fixtures::three_node();
    CHECK(kind_of([&] { robustnet::apply(net, RemoveEdge{NodeId{1}, NodeId{3}}); }) == ErrorKind::PreconditionViolated);
    CHECK(kind_of([&] { robustnet::apply(net, RemoveNode{NodeId{3}}); }) == ErrorKind::PreconditionViolated);
    CHECK(kind_of([&] { robustnet::apply(net, AddEdge{NodeId{3}, NodeId{1}, 0.5}); }) == ErrorKind::PreconditionViolated);
    CHECK(kind_of([&] { robustnet::apply(net, AddEdge{NodeId{2}, NodeId{2}, 0.5}); }) == ErrorKind::PreconditionViolated);
    CHECK(kind_of([&] { robustnet::apply(net, AddEdge{NodeId{1}, NodeId{2}, 0.0}); }) == ErrorKind::PreconditionViolated);
    CHECK(kind_of([&] { robustnet::apply(net, AddNode{-1.0}); }) == ErrorKind::PreconditionViolated);
    CHECK(kind_of([&] { robustnet::apply(net, AddEdge{NodeId{9}, NodeId{1}, 0.5}); }) == ErrorKind::IndexOutOfRange);
    CHECK(kind_of([&] { robustnet::apply(net, RaiseSelfFeedback{NodeId{1}, 0.5}); }) == ErrorKind::PreconditionViolated);
    CHECK(kind_of([&] { robustnet::apply(Network({1.0}, {}), RemoveNode{NodeId{1}}); }) ==
          ErrorKind::PreconditionViolated);
}

TEST_CASE("apply: node removal compacts indices", "[changes][apply]") {
    const Network net({1.0, 2.0, 3.0}, fixtures::edges({{3, 1, 0.5}}));
    const ApplyResult r = robustnet::apply(net, RemoveNode{NodeId{2}});
    CHECK(r.network == Network({1.0, 3.0}, fixtures::edges({{2, 1, 0.5}})));
    REQUIRE(r.index_map.size() == 3);
    CHECK(r.index_map[0] == NodeId{1});
    CHECK_FALSE(r.index_map[1].has_value());
    CHECK(r.index_map[2] == NodeId{2});

    const auto cascade = expand_cascade(fixtures::three_node(), RemoveNodeCascade{NodeId{2}});
    CHECK(cascade.size() == 3);
    CHECK(robustnet::apply(fixtures::three_node(), RemoveNodeCascade{NodeId{2}}).network ==
          Network({1.0, 1.0}, fixtures::edges({{2, 1, 1.0}})));
}

TEST_CASE("node removal verdicts", "[changes][removal]") {
    const ChangeVerdict v = verdict(fixtures::four_node(), SequenceStep{RemoveNode{NodeId{4}}});
    CHECK(v.scalable);
    CHECK(v.u_after == vec({1, 2, 4}));
    CHECK(verdict(Network({1.0, 1.0}, {}), SequenceStep{RemoveNode{NodeId{1}}}).scalable);
    CHECK(kind_of([] { verdict(fixtures::three_node(), SequenceStep{RemoveNode{NodeId{3}}}); }) ==
          ErrorKind::PreconditionViolated);
}

TEST_CASE("edge removal verdicts", "[changes][removal]") {
    const Network net = fixtures::three_node();
    const ChangeVerdict v32 = verdict(net, SequenceStep{RemoveEdge{NodeId{3}, NodeId{2}}});
    CHECK(v32.scalable);
    CHECK(oracle::max_relative_error(v32.u_after, oracle::u(oracle::without_edge(net, NodeId{3}, NodeId{2}))) <= 1e-15);
    CHECK(v32.u_after == vec({1, 2, 2}));

    const ChangeVerdict v21 = verdict(net, SequenceStep{RemoveEdge{NodeId{2}, NodeId{1}}});
    CHECK(v21.scalable);
    CHECK(v21.u_after == vec({1, 1, 3}));
    CHECK(v21.performance_loss == vec({0, -1, -1}));

    const ChangeVerdict chain = verdict(Network({1.0, 1.0}, fixtures::edges({{2, 1, 0.5}})),
                                        SequenceStep{RemoveEdge{NodeId{2}, NodeId{1}}});
    CHECK(chain.u_after == vec({1, 1}));
}

TEST_CASE("node addition verdicts", "[changes][addition]") {
    const Network net = fixtures::three_node();
    const ChangeVerdict quarter = verdict(net, SequenceStep{AddNode{0.25}});
    CHECK(quarter.scalable);
    CHECK(quarter.u_after == vec({1, 2, 4, 4}));
    CHECK(*quarter.gamma_after == 4.0);

    const ChangeVerdict fifth = verdict(net, SequenceStep{AddNode{0.2}});
    CHECK_FALSE(fifth.scalable);
    CHECK(*fifth.gamma_after == 5.0);

    const ChangeVerdict unit = verdict(net, SequenceStep{AddNode{1.0}});
    CHECK(unit.scalable);
    CHECK(unit.u_after(3) == 1.0);
}

TEST_CASE("edge addition verdicts", "[changes][addition]") {
    const ChangeVerdict v = verdict(fixtures::four_node(), SequenceStep{AddEdge{NodeId{4}, NodeId{2}, 0.1}});
    CHECK_FALSE(v.scalable);
    CHECK(v.stable_after);
    CHECK(v.u_after(3) == Approx(4.8).epsilon(1e-12));
    CHECK(*v.gamma_after == Approx(4.8).epsilon(1e-12));
    REQUIRE(v.add_edge);
    CHECK(v.add_edge->lower_bound == Approx(4.8).epsilon(1e-15));
    REQUIRE(v.repair);
    CHECK(v.repair->a_new == 0.3);

    const Network edgeless({1.0, 1.0}, {});
    const ChangeVerdict two = verdict(edgeless, SequenceStep{AddEdge{NodeId{2}, NodeId{1}, 0.5}});
    CHECK(two.u_after == vec({1, 1.5}));
    CHECK_FALSE(two.scalable);

    CHECK(kind_of([] { verdict(fixtures::three_node(), SequenceStep{AddEdge{NodeId{3}, NodeId{1}, 0.3}}); }) ==
          ErrorKind::PreconditionViolated);
}

TEST_CASE("edge addition that closes a unit loop destabilises", "[changes][addition]") {
    const Network net({1.0, 1.0}, fixtures::edges({{1, 2, 1.0}}));
    const ChangeVerdict v = verdict(net, SequenceStep{AddEdge{NodeId{2}, NodeId{1}, 1.0}});
    CHECK_FALSE(v.stable_after);
    CHECK_FALSE(v.scalable);
    CHECK(v.u_after.size() == 0);
    CHECK_FALSE(v.gamma_after);
    REQUIRE(v.add_edge);
    CHECK(v.add_edge->loop_gain == 1.0);
}

TEST_CASE("lower bound on the new head entry", "[changes][addition]") {
    CHECK(lower_bound_added_edge(fixtures::four_node(), NodeId{4}, NodeId{2}, 0.1) == Approx(4.8).epsilon(1e-15));
    CHECK(lower_bound_added_edge(Network({1.0, 1.0}, {}), NodeId{2}, NodeId{1}, 0.5) == 1.5);
}

TEST_CASE("sufficient local check", "[changes][local]") {
    const Network net = fixtures::three_node();
    const Certificate tight{vec({1, 2, 4}), 4.0};
    for (double w : {1e-6, 0.1, 3.0}) CHECK_FALSE(sufficient_local_check(net, {NodeId{1}, NodeId{2}, w}, tight));

    const Network loose({3.0, 1.0}, {});
    const Certificate ones{vec({1, 1}), 1.0};
    const AddEdge edge{NodeId{1}, NodeId{2}, 1.0};
    REQUIRE(sufficient_local_check(loose, edge, ones));
    CHECK(check_certificate(robustnet::apply(loose, edge).network, ones));
    CHECK(verdict(loose, SequenceStep{edge}).scalable);

    CHECK(kind_of([&] { sufficient_local_check(net, {NodeId{1}, NodeId{2}, 0.1}, {vec({1, 1, 1}), 1.0}); }) ==
          ErrorKind::InvalidCertificate);
}

TEST_CASE("diagonal dominance check", "[changes][local]") {
    const Network net({2.0, 2.0}, fixtures::edges({{2, 1, 0.5}}));
    CHECK(diagonal_dominance_check(net, {NodeId{1}, NodeId{2}, 0.5}, 1.0));
    CHECK_FALSE(diagonal_dominance_check(net, {NodeId{1}, NodeId{2}, 1.5}, 1.0));
    CHECK(kind_of([] { diagonal_dominance_check(fixtures::three_node(), {NodeId{1}, NodeId{2}, 0.1}, 4.0); }) ==
          ErrorKind::NotDiagonallyDominant);
}

TEST_CASE("self-feedback repair", "[changes][repair]") {
    const SelfFeedbackRepair r =
        propose_repair(fixtures::four_node(), {NodeId{4}, NodeId{2}, 0.1}, {vec({1, 2, 4, 4}), 4.0});
    CHECK(r.node == NodeId{4});
    CHECK(r.a_old == 0.25);
    CHECK(r.a_new == 0.3);
    const Network repaired = robustnet::apply(
        robustnet::apply(fixtures::four_node(), AddEdge{NodeId{4}, NodeId{2}, 0.1}).network, r.as_step()).network;
    CHECK(*robustness_vector(repaired).gamma_min == Approx(4.0).epsilon(1e-12));

    const Network edgeless({1.0, 1.0}, {});
    const AddEdge edge{NodeId{2}, NodeId{1}, 0.5};
    const SelfFeedbackRepair r2 = propose_repair(edgeless, edge, {vec({1, 1}), 1.0});
    CHECK(r2.a_new == 1.5);
    const Network fixed = robustnet::apply(robustnet::apply(edgeless, edge).network, r2.as_step()).network;
    CHECK(robustness_vector(fixed).u == vec({1, 1}));
}

TEST_CASE("repair keeps the certificate valid on random networks", "[changes][repair]") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const Network net = gen::stable_network(rng, {});
        const auto pair = gen::missing_edge(rng, net);
        if (!pair) continue;
        const AddEdge edge{pair->first, pair->second, std::uniform_real_distribution<double>(0.05, 2.0)(rng)};
        const Certificate cert = default_certificate(net);
        const SelfFeedbackRepair r = propose_repair(net, edge, cert);
        const Network fixed = robustnet::apply(robustnet::apply(net, edge).network, r.as_step()).network;
        INFO("trial " << trial);
        CHECK(check_certificate(fixed, cert));
        // u_after can meet the certificate with equality; the solve then lands within ulps of gamma
        CHECK(*robustness_vector(fixed).gamma_min <= cert.gamma * (1.0 + 1e-12));
    }
}

TEST_CASE("rank-one updates agree with direct solves", "[changes][oracle]") {
    std::mt19937_64 rng(99);
    ChangeOptions opts;
    opts.verify_direct = true;
    for (int trial = 0; trial < 300; ++trial) {
        gen::NetworkShape shape;
        shape.max_nodes = 30;
        const Network net = gen::stable_network(rng, shape);
        INFO("trial " << trial);
        if (trial % 2 == 0 && !net.edges().empty()) {
            auto it = net.edges().begin();
            std::advance(it, std::uniform_int_distribution<std::size_t>(0, net.edges().size() - 1)(rng));
            const ChangeVerdict v = verdict(net, SequenceStep{RemoveEdge{it->first.to, it->first.from}}, opts);
            const Eigen::VectorXd want = oracle::u(oracle::without_edge(net, it->first.to, it->first.from));
            CHECK(oracle::max_relative_error(v.u_after, want) <= 1e-9);
            CHECK(*v.direct_discrepancy <= 1e-9);
        } else if (const auto pair = gen::missing_edge(rng, net)) {
            const double w = std::uniform_real_distribution<double>(0.01, 0.5)(rng);
            const ChangeVerdict v = verdict(net, SequenceStep{AddEdge{pair->first, pair->second, w}}, opts);
            const Network after = oracle::with_edge(net, pair->first, pair->second, w);
            CHECK(v.stable_after == (oracle::spectral_radius(after) < 1.0));
            if (v.stable_after) CHECK(oracle::max_relative_error(v.u_after, oracle::u(after)) <= 1e-9);
        }
    }
}

TEST_CASE("adding then removing an edge restores u", "[changes][oracle]") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const Network net = gen::stable_network(rng, {});
        const auto pair = gen::missing_edge(rng, net);
        if (!pair) continue;
        const AddEdge edge{pair->first, pair->second, 0.05};
        const ChangeVerdict added = verdict(net, SequenceStep{edge});
        if (!added.stable_after) continue;
        const Network after = robustnet::apply(net, edge).network;
        const ChangeVerdict removed = verdict(after, SequenceStep{RemoveEdge{edge.to, edge.from}});
        CHECK(robustnet::apply(after, RemoveEdge{edge.to, edge.from}).network == net);
        CHECK(oracle::max_relative_error(removed.u_after, added.u_before) <= 1e-12);
    }
}

TEST_CASE("a path from the new edge's head to an argmax node forbids scalability", "[changes][addition]") {
    std::mt19937_64 rng(5);
    int seen = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const Network net = gen::stable_network(rng, {});
        const auto pair = gen::missing_edge(rng, net);
        if (!pair) continue;
        const ChangeVerdict v = verdict(net, SequenceStep{AddEdge{pair->first, pair->second, 0.05}});
        REQUIRE(v.add_edge);
        if (v.add_edge->path_to_argmax) {
            ++seen;
            CHECK_FALSE(v.scalable);
        }
    }
    CHECK(seen > 0);
}

TEST_CASE("sequence over the three-node chain", "[changes][sequence]") {
    const Network net = fixtures::three_node();
    const std::vector<SequenceStep> script{AddNode{0.25}, AddEdge{NodeId{4}, NodeId{2}, 0.1}};
    const SequenceReport r = check_sequence(net, script, 4.0);
    REQUIRE(r.steps.size() == 2);
    CHECK(r.steps[0].verdict.scalable);
    CHECK_FALSE(r.steps[1].verdict.scalable);
    CHECK(*r.steps[1].verdict.gamma_after == Approx(4.8).epsilon(1e-12));
    CHECK_FALSE(r.final_robust);

    auto repaired = script;
    repaired.push_back(RaiseSelfFeedback{NodeId{4}, 0.3});
    const SequenceReport fixed = check_sequence(net, repaired, 4.0);
    CHECK(fixed.steps.size() == 3);
    CHECK(fixed.final_robust);
    CHECK_FALSE(fixed.all_scalable());

    const SequenceReport empty = check_sequence(net, {}, 4.0);
    CHECK(empty.steps.empty());
    CHECK(empty.final_report.u == empty.initial.u);
    CHECK(empty.final_robust);
}

TEST_CASE("sequence halts on a destabilising step and tags errors with the step", "[changes][sequence]") {
    const Network net({1.0, 1.0}, fixtures::edges({{1, 2, 1.0}}));
    const SequenceReport r = check_sequence(
        net, {AddEdge{NodeId{2}, NodeId{1}, 1.0}, RemoveEdge{NodeId{1}, NodeId{2}}}, 10.0);
    CHECK(r.halted_at == 1u);
    CHECK(r.steps.size() == 1);
    CHECK_FALSE(r.final_robust);

    try {
        check_sequence(fixtures::three_node(), {AddNode{1.0}, RemoveEdge{NodeId{1}, NodeId{3}}}, 4.0);
        FAIL("expected PreconditionViolated");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PreconditionViolated);
        CHECK(e.step() == 2u);
        CHECK_THAT(std::string(e.what()), Catch::StartsWith("step 2:"));
    }
}
