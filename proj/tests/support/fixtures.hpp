#pragma once

#include <robustnet/robustnet.hpp>

namespace fixtures {

using robustnet::EdgeMap;
using robustnet::Network;
using robustnet::NodeId;

inline EdgeMap edges(std::initializer_list<std::tuple<std::size_t, std::size_t, double>> list) {
    EdgeMap out;
    for (const auto& [to, from, w] : list) out[{NodeId{to}, NodeId{from}}] = w;
    return out;
}

/// a = 1 everywhere, 1 -> 2, 1 -> 3, 2 -> 3 with unit weights; u = (1, 2, 4).
inline Network three_node() { return Network({1.0, 1.0, 1.0}, edges({{2, 1, 1.0}, {3, 1, 1.0}, {3, 2, 1.0}})); }

/// three_node plus an isolated node with a = 0.25.
inline Network four_node() {
    return Network({1.0, 1.0, 1.0, 0.25}, edges({{2, 1, 1.0}, {3, 1, 1.0}, {3, 2, 1.0}}));
}

/// Two nodes feeding each other; rho(M A^-1) = w12 w21 / (a1 a2).
inline Network two_cycle(double a1, double a2, double w12, double w21) {
    return Network({a1, a2}, edges({{1, 2, w12}, {2, 1, w21}}));
}

} // namespace fixtures
