// Three-node chain: analyse, grow it by one node and one edge, then repair.
#include <robustnet/robustnet.hpp>

#include <iostream>

using namespace robustnet;

int main() {
    const Network net({1.0, 1.0, 1.0}, {{{NodeId{2}, NodeId{1}}, 1.0},
                                        {{NodeId{3}, NodeId{1}}, 1.0},
                                        {{NodeId{3}, NodeId{2}}, 1.0}});
    const RobustnessReport report = robustness_vector(net);
    std::cout << "gamma_min = " << *report.gamma_min << "\n";

    const Network grown = robustnet::apply(net, AddNode{0.25}).network;
    const AddEdge edge{NodeId{4}, NodeId{2}, 0.1};
    const ChangeVerdict v = verdict(grown, SequenceStep{edge});
    std::cout << "add edge 2->4: scalable = " << std::boolalpha << v.scalable
              << ", gamma_after = " << *v.gamma_after << "\n";

    if (v.repair) {
        std::cout << "repair: raise a_" << v.repair->node.value << " to " << v.repair->a_new << "\n";
        const Network fixed = robustnet::apply(robustnet::apply(grown, edge).network, v.repair->as_step()).network;
        std::cout << "repaired gamma_min = " << *robustness_vector(fixed).gamma_min << "\n";
    }
    return 0;
}
