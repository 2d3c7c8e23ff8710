#include <gtest/gtest.h>

#include <random>

#include "ckm/min_cost_flow.hpp"
#include "ckm/partition.hpp"
#include "test_util.hpp"

using namespace ckm;

TEST(MinCostFlow, SinglePath) {
  FlowNetwork net;
  net.nodes = 4;
  net.source = 0;
  net.sink = 3;
  net.flow_value = 1;
  net.add_arc(0, 1, 1, 0.0);
  net.add_arc(1, 2, 1, 2.5);
  net.add_arc(2, 3, 1, 0.0);
  auto s = solve_min_cost_flow(net);
  EXPECT_EQ(s.flow, (std::vector<std::int64_t>{1, 1, 1}));
  EXPECT_DOUBLE_EQ(s.cost, 2.5);
}

TEST(MinCostFlow, PrefersCheapRouteThenSaturates) {
  FlowNetwork net;
  net.nodes = 4;
  net.source = 0;
  net.sink = 3;
  net.flow_value = 3;
  net.add_arc(0, 1, 2, 1.0);
  net.add_arc(0, 2, 5, 4.0);
  net.add_arc(1, 3, 5, 0.0);
  net.add_arc(2, 3, 5, 0.0);
  auto s = solve_min_cost_flow(net);
  EXPECT_EQ(s.flow[0], 2);
  EXPECT_EQ(s.flow[1], 1);
  EXPECT_DOUBLE_EQ(s.cost, 6.0);
}

TEST(MinCostFlow, LowerBoundForcesExpensiveArc) {
  FlowNetwork net;
  net.nodes = 4;
  net.source = 0;
  net.sink = 3;
  net.flow_value = 2;
  net.add_arc(0, 1, 2, 0.0);
  net.add_arc(1, 3, 2, 0.0);
  net.add_arc(0, 2, 2, 0.0);
  net.add_arc(2, 3, 2, 10.0, 1);  // must carry at least 1
  auto s = solve_min_cost_flow(net);
  EXPECT_EQ(s.flow[3], 1);
  EXPECT_EQ(s.flow[1], 1);
  EXPECT_DOUBLE_EQ(s.cost, 10.0);
}

TEST(MinCostFlow, NegativeCostsHandled) {
  FlowNetwork net;
  net.nodes = 3;
  net.source = 0;
  net.sink = 2;
  net.flow_value = 1;
  net.add_arc(0, 1, 1, -3.0);
  net.add_arc(1, 2, 1, 1.0);
  net.add_arc(0, 2, 1, 0.0);
  EXPECT_DOUBLE_EQ(solve_min_cost_flow(net).cost, -2.0);
}

TEST(MinCostFlow, Infeasible) {
  FlowNetwork net;
  net.nodes = 3;
  net.source = 0;
  net.sink = 2;
  net.flow_value = 3;
  net.add_arc(0, 1, 2, 0.0);
  net.add_arc(1, 2, 2, 0.0);
  EXPECT_THROW(solve_min_cost_flow(net), Infeasible);
  FlowNetwork lb;
  lb.nodes = 3;
  lb.source = 0;
  lb.sink = 2;
  lb.flow_value = 1;
  lb.add_arc(0, 1, 1, 0.0);
  lb.add_arc(1, 2, 3, 0.0, 2);  // demands more than the source supplies
  EXPECT_THROW(solve_min_cost_flow(lb), Infeasible);
  FlowNetwork bad;
  bad.nodes = 2;
  bad.sink = 1;
  bad.add_arc(0, 1, 1, 0.0, 2);
  EXPECT_THROW(solve_min_cost_flow(bad), InvalidArgument);
}

TEST(AssignmentNetwork, Shape) {
  auto X = Dataset::from_rows({{0}, {1}, {10}, {11}});
  auto C = CenterSet::from_rows({{0.5}, {10.5}});
  auto f = ConstraintFamily::r_gather(2);
  auto an = build_assignment_network(X, C, f.lower(4, 2), f.upper(4, 2));
  EXPECT_EQ(an.network.nodes, 4u + 2u + 2u);
  std::size_t middle = 0, center_arcs = 0;
  for (const auto& a : an.network.arcs) {
    const bool from_point = a.from >= 1 && a.from <= 4;
    const bool to_center = a.to >= 5 && a.to <= 6;
    if (from_point && to_center) {
      ++middle;
      EXPECT_EQ(a.capacity, 1);
    }
    if (a.to == an.network.sink) {
      ++center_arcs;
      EXPECT_EQ(a.lower, 2);
      EXPECT_EQ(a.capacity, 4);
    }
  }
  EXPECT_EQ(middle, 8u);
  EXPECT_EQ(center_arcs, 2u);
  EXPECT_DOUBLE_EQ(an.network.arcs[an.first_point_arc + 2 * 2 + 0].cost, 9.5 * 9.5);
}

TEST(AssignmentNetwork, InfeasibleBoundsRejectedBeforeSolving) {
  auto X = Dataset::from_rows({{0}, {1}});
  auto C = CenterSet::from_rows({{0}, {1}});
  EXPECT_THROW(build_assignment_network(X, C, {2, 2}, {2, 2}), Infeasible);
  EXPECT_THROW(build_assignment_network(X, C, {0, 0}, {0, 1}), Infeasible);
  EXPECT_THROW(build_assignment_network(X, C, {0}, {2}), InvalidArgument);
}

TEST(AssignmentNetwork, FourPointExample) {
  auto X = Dataset::from_rows({{0}, {1}, {10}, {11}});
  auto C = CenterSet::from_rows({{0.5}, {10.5}});
  auto O = partition(C, X, ConstraintFamily::r_gather(2));
  EXPECT_EQ(O.assignment, (std::vector<std::uint32_t>{0, 0, 1, 1}));
  EXPECT_DOUBLE_EQ(identity_cost(C, O, X), 1.0);
}

TEST(AssignmentNetwork, UnboundedEqualsVoronoiCost) {
  std::mt19937_64 gen(31);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 3 + t % 10, k = 1 + t % 4;
    auto X = ckm_test::random_dataset(gen, n, 2);
    auto C = ckm_test::random_centers(gen, k, 2);
    auto an = build_assignment_network(X, C, std::vector<std::size_t>(k, 0), std::vector<std::size_t>(k, n));
    auto sol = solve_min_cost_flow(an.network);
    auto O = clustering_from_flow(an, sol);
    EXPECT_TRUE(ckm_test::near(sol.cost, phi(C, X)));
    EXPECT_TRUE(ckm_test::near(identity_cost(C, O, X), phi(C, X)));
  }
}

TEST(AssignmentNetwork, CapacityOneIsPerfectMatching) {
  std::mt19937_64 gen(32);
  for (int t = 0; t < 30; ++t) {
    const std::size_t k = 1 + t % 6;
    auto X = ckm_test::random_dataset(gen, k, 3);
    auto C = ckm_test::random_centers(gen, k, 3);
    auto O = partition(C, X, ConstraintFamily::r_capacity(1));
    // point i served by center i: identity cost; oracle is k! over points
    Clustering trivial(std::vector<std::uint32_t>(k), k);
    for (std::size_t i = 0; i < k; ++i) trivial.assignment[i] = static_cast<std::uint32_t>(i);
    EXPECT_TRUE(ckm_test::near(identity_cost(C, O, X), ckm_test::permutation_brute_force(C, trivial, X)));
    for (auto s : O.sizes()) EXPECT_EQ(s, 1u);
  }
}
