#include <catch2/catch_amalgamated.hpp>

#include "mixchar/charac.hpp"
#include "mixchar/sets.hpp"

using namespace mixchar;

namespace {

Matrix p3_matrix() {
  Matrix P(3, 3);
  P << 0, 1, 0, 0.5, 0, 0.5, 0, 1, 0;
  return P;
}

std::vector<std::vector<int>> sorted_sets(ConnectedSetFamily family) {
  std::sort(family.sets.begin(), family.sets.end());
  return family.sets;
}

}  // namespace

TEST_CASE("is_connected_on_the_path") {
  ChainModel p3 = from_matrix(p3_matrix());
  CHECK_FALSE(is_connected(p3, {0, 2}));
  CHECK(is_connected(p3, {0, 1}));
  CHECK(is_connected(p3, {1}));
  CHECK_THROWS_AS(is_connected(p3, {}), EmptySet);
}

TEST_CASE("enumerate_p3_families") {
  ChainModel p3 = from_matrix(p3_matrix());
  auto half = enumerate_connected(p3, 0.5);
  CHECK(half.complete);
  // pi = (1/4, 1/2, 1/4): only the three singletons fit under 1/2
  CHECK(sorted_sets(half) == std::vector<std::vector<int>>{{0}, {1}, {2}});

  auto full = enumerate_connected(p3, 1.0);
  CHECK(full.sets.size() == 6);  // all nonempty subsets except {0,2}
}

TEST_CASE("two_state_family") {
  auto family = enumerate_connected(two_state(), 0.5);
  CHECK(sorted_sets(family) == std::vector<std::vector<int>>{{0}, {1}});
}

TEST_CASE("enumerate_matches_brute_force") {
  std::mt19937_64 rng(5);
  std::vector<ChainModel> chains;
  chains.push_back(families::cycle(12));
  chains.push_back(families::path(11));
  chains.push_back(families::hypercube(3));
  chains.push_back(families::clique(6));
  chains.push_back(families::binary_tree(2));
  chains.push_back(random_weighted_tree(10, 0.25, 4.0, rng));
  chains.push_back(random_weighted_tree(12, 0.5, 2.0, rng));
  for (const auto& chain : chains) {
    for (double delta : {0.3, 0.5, 1.0}) {
      auto fast = sorted_sets(enumerate_connected(chain, delta));
      auto slow = brute_force_connected(chain, delta);
      CHECK(fast == slow);
    }
  }
}

TEST_CASE("path_interval_count") {
  for (int n : {2, 5, 9}) {
    auto family = enumerate_connected(families::path(n), 1.0);
    CHECK(family.sets.size() == static_cast<std::size_t>(n * (n + 1) / 2));
  }
}

TEST_CASE("cap_behaviour") {
  auto capped = enumerate_connected(families::hypercube(3), 0.5, 10);
  CHECK_FALSE(capped.complete);
  CHECK(capped.sets.size() == 10);
  CHECK_THROWS_AS(enumerate_connected(families::hypercube(3), 0.5, 10, true), CapExceeded);
}

TEST_CASE("rho_over_connected_equals_rho_over_all_subsets") {
  // dropping the connectivity requirement does not change rho_x: the
  // escape time from a disconnected set is the escape time from the
  // component of the start
  std::mt19937_64 rng(31);
  for (const ChainModel& chain :
       {families::cycle(6), families::hypercube(3), random_weighted_tree(7, 0.25, 4.0, rng)}) {
    auto family = enumerate_connected(chain, 0.5);
    auto rho_conn = rho_family(chain, HittingTarget::rho(), family, TimeMode::Continuous);

    ConnectedSetFamily all_sets;
    all_sets.delta = 0.5;
    all_sets.complete = true;
    const int n = chain.n();
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      std::vector<int> set;
      double mass = 0.0;
      for (int v = 0; v < n; ++v)
        if (mask & (1u << v)) {
          set.push_back(v);
          mass += chain.pi[v];
        }
      if (mass <= 0.5 + kMassTol && static_cast<int>(set.size()) < n)
        all_sets.sets.push_back(std::move(set));
    }
    auto rho_all = rho_family(chain, HittingTarget::rho(), all_sets, TimeMode::Continuous);
    for (int x = 0; x < n; ++x)
      CHECK(rho_all.per_state[x] == Catch::Approx(rho_conn.per_state[x]).margin(1e-9));
  }
}
