#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "ckm/error.hpp"

namespace ckm {

struct FlowArc {
  std::size_t from = 0;
  std::size_t to = 0;
  std::int64_t capacity = 0;
  std::int64_t lower = 0;
  double cost = 0.0;
};

/// A directed network with integral capacities and lower bounds and real
/// costs. `flow_value` units must travel from `source` to `sink`.
struct FlowNetwork {
  std::size_t nodes = 0;
  std::vector<FlowArc> arcs;
  std::size_t source = 0;
  std::size_t sink = 0;
  std::int64_t flow_value = 0;

  std::size_t add_arc(std::size_t from, std::size_t to, std::int64_t capacity, double cost, std::int64_t lower = 0) {
    arcs.push_back(FlowArc{from, to, capacity, lower, cost});
    return arcs.size() - 1;
  }

  void validate() const {
    if (source >= nodes || sink >= nodes) {
      throw InvalidArgument("source or sink outside the network");
    }
    if (flow_value < 0) {
      throw InvalidArgument("flow value must be nonnegative");
    }
    for (const auto& a : arcs) {
      if (a.from >= nodes || a.to >= nodes) {
        throw InvalidArgument("arc endpoint outside the network");
      }
      if (a.lower < 0 || a.capacity < a.lower) {
        throw InvalidArgument("arc needs 0 <= lower bound <= capacity");
      }
      if (!std::isfinite(a.cost)) {
        throw InvalidArgument("arc cost must be finite");
      }
    }
  }
};

struct FlowSolution {
  std::vector<std::int64_t> flow;  // one entry per arc of the input network
  double cost = 0.0;
};

namespace detail {

// Residual graph for successive shortest paths with node potentials.
class ResidualGraph {
 public:
  explicit ResidualGraph(std::size_t n) : adj_(n) {}

  std::size_t add(std::size_t from, std::size_t to, std::int64_t cap, double cost) {
    const std::size_t id = edges_.size();
    edges_.push_back({to, cap, cost});
    edges_.push_back({from, 0, -cost});
    adj_[from].push_back(id);
    adj_[to].push_back(id + 1);
    return id;
  }

  std::int64_t flow_on(std::size_t id) const { return edges_[id + 1].cap; }

  // Pushes up to `limit` units from s to t along cheapest paths.
  std::int64_t run(std::size_t s, std::size_t t, std::int64_t limit) {
    const std::size_t n = adj_.size();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> pot(n, 0.0);
    bellman_ford(s, pot);
    std::vector<double> dist(n);
    std::vector<std::size_t> via(n);
    std::int64_t pushed = 0;
    using Item = std::pair<double, std::size_t>;
    while (pushed < limit) {
      std::fill(dist.begin(), dist.end(), kInf);
      dist[s] = 0.0;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      heap.emplace(0.0, s);
      while (!heap.empty()) {
        const auto [du, u] = heap.top();
        heap.pop();
        if (du > dist[u]) {
          continue;
        }
        for (std::size_t id : adj_[u]) {
          const Edge& e = edges_[id];
          if (e.cap <= 0) {
            continue;
          }
          // Reduced costs are nonnegative in exact arithmetic; clamp drift.
          const double reduced = std::max(0.0, e.cost + pot[u] - pot[e.to]);
          const double nd = du + reduced;
          if (nd < dist[e.to]) {
            dist[e.to] = nd;
            via[e.to] = id;
            heap.emplace(nd, e.to);
          }
        }
      }
      if (dist[t] == kInf) {
        break;
      }
      for (std::size_t v = 0; v < n; ++v) {
        if (dist[v] < kInf) {
          pot[v] += dist[v];
        }
      }
      std::int64_t bottleneck = limit - pushed;
      for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to) {
        bottleneck = std::min(bottleneck, edges_[via[v]].cap);
      }
      for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to) {
        edges_[via[v]].cap -= bottleneck;
        edges_[via[v] ^ 1].cap += bottleneck;
      }
      pushed += bottleneck;
    }
    return pushed;
  }

 private:
  struct Edge {
    std::size_t to;
    std::int64_t cap;
    double cost;
  };

  void bellman_ford(std::size_t s, std::vector<double>& pot) const {
    const std::size_t n = adj_.size();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::fill(pot.begin(), pot.end(), kInf);
    pot[s] = 0.0;
    for (std::size_t round = 0; round < n; ++round) {
      bool changed = false;
      for (std::size_t u = 0; u < n; ++u) {
        if (pot[u] == kInf) {
          continue;
        }
        for (std::size_t id : adj_[u]) {
          const Edge& e = edges_[id];
          if (e.cap > 0 && pot[u] + e.cost < pot[e.to] - 1e-12) {
            pot[e.to] = pot[u] + e.cost;
            changed = true;
          }
        }
      }
      if (!changed) {
        break;
      }
    }
    for (double& p : pot) {
      if (p == kInf) {
        p = 0.0;
      }
    }
  }

  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adj_;
};

}  // namespace detail

/// Minimum-cost feasible flow of value `flow_value`. Lower bounds are
/// removed by shifting them into node excesses, and the resulting
/// transshipment problem is solved by successive shortest paths (Dijkstra
/// on reduced costs). Flows are integral because capacities are.
inline FlowSolution solve_min_cost_flow(const FlowNetwork& net) {
  net.validate();
  const std::size_t super_source = net.nodes;
  const std::size_t super_sink = net.nodes + 1;
  detail::ResidualGraph g(net.nodes + 2);
  std::vector<std::int64_t> excess(net.nodes, 0);
  std::vector<std::size_t> ids(net.arcs.size());
  double fixed_cost = 0.0;
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    const auto& arc = net.arcs[a];
    ids[a] = g.add(arc.from, arc.to, arc.capacity - arc.lower, arc.cost);
    excess[arc.to] += arc.lower;
    excess[arc.from] -= arc.lower;
    fixed_cost += static_cast<double>(arc.lower) * arc.cost;
  }
  excess[net.source] += net.flow_value;
  excess[net.sink] -= net.flow_value;
  std::int64_t required = 0;
  for (std::size_t v = 0; v < net.nodes; ++v) {
    if (excess[v] > 0) {
      g.add(super_source, v, excess[v], 0.0);
      required += excess[v];
    } else if (excess[v] < 0) {
      g.add(v, super_sink, -excess[v], 0.0);
    }
  }
  const std::int64_t pushed = g.run(super_source, super_sink, required);
  if (pushed < required) {
    throw Infeasible("flow network is infeasible: routed " + std::to_string(pushed) + " of " +
                     std::to_string(required) + " required units");
  }
  FlowSolution sol;
  sol.flow.resize(net.arcs.size());
  sol.cost = fixed_cost;
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    sol.flow[a] = net.arcs[a].lower + g.flow_on(ids[a]);
    sol.cost += static_cast<double>(g.flow_on(ids[a])) * net.arcs[a].cost;
  }
  return sol;
}

}  // namespace ckm
