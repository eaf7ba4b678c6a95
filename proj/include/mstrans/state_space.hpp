#pragma once

#include <utility>
#include <vector>

#include "mstrans/error.hpp"

namespace mstrans {

using Edge = std::pair<int, int>;

// Finite state space with a permissible-transition graph. The default is
// the four delinquency states: 0 current, 1/2 early and late delinquency,
// 3 absorbing default, with edges
// {0->1, 1->0, 1->2, 2->0, 2->1, 2->3}.
struct StateSpace {
  int n_states = 4;
  std::vector<int> absorbing = {3};
  std::vector<Edge> edges = {{0, 1}, {1, 0}, {1, 2}, {2, 0}, {2, 1}, {2, 3}};

  static StateSpace default_space() { return StateSpace{}; }

  bool is_absorbing(int k) const {
    for (int a : absorbing)
      if (a == k) return true;
    return false;
  }

  bool is_edge(int k, int l) const {
    for (const Edge& e : edges)
      if (e.first == k && e.second == l) return true;
    return false;
  }

  std::vector<Edge> edges_from(int k) const {
    std::vector<Edge> out;
    for (const Edge& e : edges)
      if (e.first == k) out.push_back(e);
    return out;
  }

  void validate() const {
    require(n_states >= 2, errc::invalid_range, "state space needs >= 2 states");
    for (int a : absorbing)
      require(a >= 0 && a < n_states, errc::invalid_range,
              "absorbing state out of range");
    for (const Edge& e : edges) {
      require(e.first >= 0 && e.first < n_states && e.second >= 0 &&
                  e.second < n_states,
              errc::invalid_range, "edge endpoint out of range");
      require(e.first != e.second, errc::invalid_range,
              "self-loops are implicit, not edges");
      require(!is_absorbing(e.first), errc::invalid_range,
              "edge leaves an absorbing state");
    }
  }
};

}  // namespace mstrans
