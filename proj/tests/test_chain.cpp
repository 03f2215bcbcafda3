#include <catch2/catch_amalgamated.hpp>

#include "mixchar/chain.hpp"
#include "mixchar/distance.hpp"
#include "mixchar/hitting.hpp"

using namespace mixchar;

namespace {

Matrix p3_matrix() {
  Matrix P(3, 3);
  P << 0, 1, 0, 0.5, 0, 0.5, 0, 1, 0;
  return P;
}

// independent stationary solve: pi (P - I) = 0 with sum(pi) = 1, by
// Gaussian elimination on the transposed system
Vector stationary_oracle(const Matrix& P) {
  const int n = static_cast<int>(P.rows());
  Matrix A = P.transpose() - Matrix::Identity(n, n);
  A.row(0).setOnes();
  Vector b = Vector::Zero(n);
  b[0] = 1.0;
  return A.fullPivLu().solve(b);
}

}  // namespace

TEST_CASE("from_matrix_basic_chains") {
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  ChainModel ts = from_matrix(swap);
  CHECK(ts.pi[0] == Catch::Approx(0.5).margin(1e-14));
  CHECK(ts.reversible);

  Matrix one(1, 1);
  one << 1;
  ChainModel single = from_matrix(one);
  CHECK(single.pi[0] == Catch::Approx(1.0));
  CHECK(single.reversible);

  ChainModel p3 = from_matrix(p3_matrix());
  Vector oracle = stationary_oracle(p3_matrix());
  for (int i = 0; i < 3; ++i) CHECK(p3.pi[i] == Catch::Approx(oracle[i]).margin(1e-13));
  CHECK(p3.pi[0] == Catch::Approx(0.25).margin(1e-12));
  CHECK(p3.pi[1] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("from_matrix_rejects_bad_input") {
  Matrix bad(2, 2);
  bad << 0.5, 0.6, 0.5, 0.5;
  CHECK_THROWS_AS(from_matrix(bad), NotStochastic);

  Matrix reducible(2, 2);
  reducible << 1, 0, 0, 1;
  CHECK_THROWS_AS(from_matrix(reducible), Reducible);

  Matrix negative(2, 2);
  negative << -0.1, 1.1, 0.5, 0.5;
  CHECK_THROWS_AS(from_matrix(negative), NotStochastic);
}

TEST_CASE("from_network_conductances") {
  WeightedNetwork single_edge;
  single_edge.vertices = {"a", "b"};
  single_edge.edges = {{"a", "b", 1.0}};
  ChainModel ts = from_network(single_edge);
  CHECK(ts.pi[0] == Catch::Approx(0.5));
  CHECK(ts.P(0, 1) == Catch::Approx(1.0));

  WeightedNetwork path_net;
  path_net.vertices = {"a", "b", "c"};
  path_net.edges = {{"a", "b", 1.0}, {"b", "c", 1.0}};
  ChainModel p3 = from_network(path_net);
  // c_a = 1, c_b = 2, c_c = 1, c_V = 4
  CHECK(p3.pi[0] == Catch::Approx(0.25));
  CHECK(p3.pi[1] == Catch::Approx(0.5));
  CHECK(p3.pi[2] == Catch::Approx(0.25));

  WeightedNetwork triangle;
  triangle.vertices = {"a", "b", "c"};
  triangle.edges = {{"a", "b", 1.0}, {"b", "c", 1.0}, {"c", "a", 1.0}};
  ChainModel tri = from_network(triangle);
  for (int i = 0; i < 3; ++i) {
    CHECK(tri.pi[i] == Catch::Approx(1.0 / 3));
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(tri.P(i, j) == Catch::Approx(0.5));
  }

  WeightedNetwork disconnected;
  disconnected.vertices = {"a", "b", "c", "d"};
  disconnected.edges = {{"a", "b", 1.0}, {"c", "d", 1.0}};
  CHECK_THROWS_AS(from_network(disconnected), Disconnected);
}

TEST_CASE("network_chains_satisfy_detailed_balance_exactly") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    ChainModel chain = random_weighted_tree(8, 0.25, 4.0, rng);
    double worst = 0.0;
    for (int x = 0; x < chain.n(); ++x)
      for (int y = 0; y < chain.n(); ++y)
        worst = std::max(worst,
                         std::abs(chain.pi[x] * chain.P(x, y) - chain.pi[y] * chain.P(y, x)));
    CHECK(worst < 1e-14);
  }
}

TEST_CASE("family_constructors") {
  ChainModel k3 = families::clique(3);
  CHECK(k3.P(0, 1) == Catch::Approx(0.5));
  // clique spectrum: 1 and -1/(n-1) with multiplicity n-1
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k3.P);
  CHECK(eig.eigenvalues()[0] == Catch::Approx(-0.5).margin(1e-12));
  CHECK(eig.eigenvalues()[1] == Catch::Approx(-0.5).margin(1e-12));
  CHECK(eig.eigenvalues()[2] == Catch::Approx(1.0).margin(1e-12));

  ChainModel lazy_ts = lazy(two_state(), 0.5);
  CHECK(lazy_ts.P(0, 0) == Catch::Approx(0.5));
  CHECK(lazy_ts.P(0, 1) == Catch::Approx(0.5));

  ChainModel c4 = families::cycle(4);
  Eigen::SelfAdjointEigenSolver<Matrix> eig4(c4.P);
  // cos(2 pi k / 4) gives {1, 0, 0, -1}
  CHECK(eig4.eigenvalues()[0] == Catch::Approx(-1.0).margin(1e-12));
  CHECK(eig4.eigenvalues()[1] == Catch::Approx(0.0).margin(1e-12));
  CHECK(eig4.eigenvalues()[2] == Catch::Approx(0.0).margin(1e-12));

  CHECK_THROWS_AS(families::cycle(1), BadParams);
  CHECK_THROWS_AS(families::birth_death({0.5, 0.7}, {0.6}), BadParams);

  ChainModel bd = families::birth_death({0.3, 0.4}, {0.2, 0.5});
  CHECK(bd.reversible);
  CHECK(bd.P(0, 0) == Catch::Approx(0.7));
  CHECK(bd.P(1, 1) == Catch::Approx(1.0 - 0.4 - 0.2));
}

TEST_CASE("clique_l2_mixing_grows_with_n") {
  double prev = 0.0;
  for (int n : {4, 8, 16}) {
    MixingQuery q;
    q.metric = Metric::L2;
    q.mode = KernelMode::Continuous;
    double tau2 = mixing_time(families::clique(n), q);
    CHECK(tau2 > prev);
    prev = tau2;
  }
}

TEST_CASE("rescale_rows_stationary_law") {
  ChainModel ts = two_state();
  Vector ones = Vector::Ones(2);
  ChainModel same = rescale_rows(ts, ones);
  CHECK(same.pi[0] == Catch::Approx(0.5));

  Vector r(2);
  r << 2.0, 1.0;
  ChainModel tilted = rescale_rows(ts, r);
  // pi-tilde proportional to (1/4, 1/2)
  CHECK(tilted.pi[0] == Catch::Approx(1.0 / 3));
  CHECK(tilted.pi[1] == Catch::Approx(2.0 / 3));

  Vector bad(2);
  bad << 1.0, 0.0;
  CHECK_THROWS_AS(rescale_rows(ts, bad), NonPositiveRate);
}

TEST_CASE("rescale_rows_occupation_fractions_by_simulation") {
  ChainModel ts = two_state();
  Vector r(2);
  r << 2.0, 1.0;
  ChainModel tilted = rescale_rows(ts, r);
  // CTMC simulation: holding times are Exp(rate(x)); occupation
  // fractions must approach pi-tilde
  std::mt19937_64 rng(12345);
  std::exponential_distribution<double> exp1(1.0);
  double occupancy[2] = {0.0, 0.0};
  int state = 0;
  for (long step = 0; step < 400000; ++step) {
    double hold = exp1(rng) / r[state];
    occupancy[state] += hold;
    state = 1 - state;  // jump matrix is the swap
  }
  double total = occupancy[0] + occupancy[1];
  CHECK(occupancy[0] / total == Catch::Approx(tilted.pi[0]).margin(5e-3));
}

TEST_CASE("rescale_rows_uniform_rate_is_a_time_change") {
  ChainModel p3 = from_matrix(p3_matrix());
  double c = 3.0;
  ChainModel sped = rescale_rows(p3, Vector::Constant(3, c));
  std::vector<int> set{0, 1};
  SurvivalCurve base = survival_curve(p3, Start::at(0), set, TimeMode::Continuous);
  SurvivalCurve fast = survival_curve(sped, Start::at(0), set, TimeMode::Continuous);
  for (double t : {0.1, 0.5, 1.0, 2.5}) {
    CHECK(fast.value(t) == Catch::Approx(base.value(c * t)).margin(1e-10));
  }
  // hitting thresholds scale by 1/c
  CHECK(fast.threshold(0.25) == Catch::Approx(base.threshold(0.25) / c).margin(1e-9));
}
