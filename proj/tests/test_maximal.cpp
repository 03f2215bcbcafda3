#include <catch2/catch_amalgamated.hpp>

#include "mixchar/maximal.hpp"

using namespace mixchar;

TEST_CASE("maximal_function_basic_shapes") {
  ChainModel ts = two_state();
  SpectralDecomposition dec = decompose(ts);

  // constants are fixed points
  auto const_profile = maximal_function(ts, Vector::Constant(2, -3.0), MaximalMode::Continuous);
  CHECK(const_profile.f_star[0] == Catch::Approx(3.0));
  CHECK(const_profile.f_star[1] == Catch::Approx(3.0));

  // eigenfunctions decay monotonically: sup at t = 0
  Vector f2 = dec.basis.col(1);
  auto eig_profile = maximal_function(ts, f2, MaximalMode::Continuous);
  for (int x = 0; x < 2; ++x)
    CHECK(eig_profile.f_star[x] == Catch::Approx(std::abs(f2[x])).margin(1e-10));

  // indicator density of {x}: phi_x = 1 + e^{-2t} (sup 2 at 0),
  // phi_y = 1 - e^{-2t} (sup 1 in the limit)
  Vector fA(2);
  fA << 2.0, 0.0;
  auto ind = maximal_function(ts, fA, MaximalMode::Continuous);
  CHECK(ind.f_star[0] == Catch::Approx(2.0).margin(1e-10));
  CHECK(ind.f_star[1] == Catch::Approx(1.0).margin(1e-10));
  double l1 = (ts.pi.array() * ind.f_star.array()).sum();
  CHECK(l1 == Catch::Approx(1.5).margin(1e-10));
}

TEST_CASE("maximal_function_dominates_samples") {
  std::mt19937_64 rng(19);
  ChainModel chain = random_weighted_tree(8, 0.25, 4.0, rng);
  ContinuousSpectrum spec = continuous_spectrum(chain);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector f(chain.n());
    for (int x = 0; x < chain.n(); ++x) f[x] = gauss(rng);
    auto profile = maximal_function(chain, f, MaximalMode::Continuous);
    // invariant: f*(x) >= |E_pi f| and f*(x) >= |f(x)|
    double mean = (chain.pi.array() * f.array()).sum();
    for (int x = 0; x < chain.n(); ++x) {
      CHECK(profile.f_star[x] >= std::abs(mean) - 1e-10);
      CHECK(profile.f_star[x] >= std::abs(f[x]) - 1e-10);
    }
    // sup dominates any sampled time
    for (double t : {0.01, 0.17, 0.9, 2.3, 8.0}) {
      Vector st = detail::semigroup_apply(spec, t, f);
      for (int x = 0; x < chain.n(); ++x)
        CHECK(profile.f_star[x] >= std::abs(st[x]) - 1e-9);
    }
  }
}

TEST_CASE("discrete_maximal_function") {
  ChainModel ts = two_state();
  Vector f(2);
  f << 2.0, 0.0;
  // P^k f alternates (2,0) -> (0,2); sup is 2 at every state
  auto disc = maximal_function(ts, f, MaximalMode::Discrete);
  CHECK(disc.f_star[0] == Catch::Approx(2.0));
  CHECK(disc.f_star[1] == Catch::Approx(2.0));
  // even steps only: P^0 = I, P^2 = I, ... sup is |f|
  auto even = maximal_function(ts, f, MaximalMode::DiscreteEven);
  CHECK(even.f_star[0] == Catch::Approx(2.0));
  CHECK(even.f_star[1] == Catch::Approx(0.0).margin(1e-12));

  // brute-force scan oracle on an aperiodic chain
  ChainModel lazy_cycle = lazy(families::cycle(5), 0.3);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Vector g(5);
    for (int x = 0; x < 5; ++x) g[x] = gauss(rng);
    auto profile = maximal_function(lazy_cycle, g, MaximalMode::Discrete);
    Vector state = g;
    Vector oracle = g.cwiseAbs();
    for (int k = 1; k <= 4000; ++k) {
      state = lazy_cycle.P * state;
      oracle = oracle.cwiseMax(state.cwiseAbs());
    }
    for (int x = 0; x < 5; ++x)
      CHECK(profile.f_star[x] == Catch::Approx(oracle[x]).margin(1e-9));
  }
}

TEST_CASE("starr_inequalities_random_functions") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (const ChainModel& chain :
       {two_state(), families::cycle(5), random_weighted_tree(7, 0.25, 4.0, rng)}) {
    SpectralDecomposition dec = decompose(chain);
    for (int trial = 0; trial < 100; ++trial) {
      Vector f(chain.n());
      for (int x = 0; x < chain.n(); ++x) f[x] = gauss(rng);
      for (double p : {2.0, 3.0}) {
        double pstar = p / (p - 1.0);
        auto cont = maximal_function(chain, dec, f, MaximalMode::Continuous, 256);
        CHECK(lp_norm_function(cont.f_star, chain.pi, p) <=
              pstar * lp_norm_function(f, chain.pi, p) + 1e-8);
        auto disc = maximal_function(chain, dec, f, MaximalMode::Discrete);
        CHECK(std::pow(lp_norm_function(disc.f_star, chain.pi, p), p) <=
              2.0 * std::pow(pstar, p) * std::pow(lp_norm_function(f, chain.pi, p), p) + 1e-8);
        auto even = maximal_function(chain, dec, f, MaximalMode::DiscreteEven);
        CHECK(lp_norm_function(even.f_star, chain.pi, p) <=
              pstar * lp_norm_function(f, chain.pi, p) + 1e-8);
      }
    }
  }
}

TEST_CASE("surprise_bound_families") {
  std::mt19937_64 rng(9);
  for (const ChainModel& chain :
       {two_state(), families::cycle(6), random_weighted_tree(6, 0.25, 4.0, rng)}) {
    auto family = enumerate_connected(chain, 0.5);
    // include the full state space as well: f_Omega = 1, norms 1 <= e
    ConnectedSetFamily extended = family;
    std::vector<int> all(chain.n());
    std::iota(all.begin(), all.end(), 0);
    extended.sets.push_back(all);
    auto records = surprise_bound_check(chain, extended);
    for (const auto& rec : records) {
      CHECK(rec.continuous_l1 <= rec.bound + 1e-8);
      CHECK(0.5 * rec.discrete_l1 <= rec.bound + 1e-8);
      // reverse direction
      CHECK((1.0 - std::exp(-1.0)) * rec.continuous_l1 - 1.0 <=
            std::abs(std::log(rec.mass)) + 1e-8);
    }
  }

  // the worked two-state example: ||f_{x}^*||_1 = 3/2 <= e
  ChainModel ts = two_state();
  ConnectedSetFamily single;
  single.delta = 0.5;
  single.sets = {{0}};
  auto rec = surprise_bound_check(ts, single);
  CHECK(rec[0].continuous_l1 == Catch::Approx(1.5).margin(1e-9));
  CHECK(rec[0].bound == Catch::Approx(std::exp(1.0)).margin(1e-12));
}
