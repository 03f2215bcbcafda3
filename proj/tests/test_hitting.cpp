#include <catch2/catch_amalgamated.hpp>

#include "mixchar/hitting.hpp"
#include "mixchar/trees.hpp"

using namespace mixchar;

namespace {

Matrix p3_matrix() {
  Matrix P(3, 3);
  P << 0, 1, 0, 0.5, 0, 0.5, 0, 1, 0;
  return P;
}

Matrix expm_oracle(const Matrix& A) {
  const int n = static_cast<int>(A.rows());
  double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = std::max(0, static_cast<int>(std::ceil(std::log2(std::max(norm, 1e-300)))) + 1);
  Matrix B = A / std::pow(2.0, squarings);
  Matrix term = Matrix::Identity(n, n);
  Matrix sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * B / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

}  // namespace

TEST_CASE("survival_two_state") {
  ChainModel ts = two_state();
  SurvivalCurve curve = survival_curve(ts, Start::at(0), {0}, TimeMode::Continuous);
  for (double t : {0.0, 0.3, 1.0, 4.0})
    CHECK(curve.value(t) == Catch::Approx(std::exp(-t)).margin(1e-12));

  SurvivalCurve disc = survival_curve(ts, Start::at(0), {0}, TimeMode::Discrete);
  CHECK(disc.at_step(0) == Catch::Approx(1.0));
  CHECK(disc.at_step(1) == Catch::Approx(0.0).margin(1e-15));

  // start outside A
  SurvivalCurve outside = survival_curve(ts, Start::at(1), {0}, TimeMode::Continuous);
  CHECK(outside.value(0.0) == 0.0);
  CHECK(outside.threshold(0.5) == 0.0);
}

TEST_CASE("survival_from_quasi_stationary_is_exactly_exponential") {
  ChainModel p3 = from_matrix(p3_matrix());
  std::vector<int> ab{0, 1};
  RestrictedSpectrum rs = restricted(p3, ab);
  SurvivalCurve curve = survival_curve(p3, Start::quasi_stationary(), ab, TimeMode::Continuous);
  CHECK(rs.lambda == Catch::Approx(1.0 - 1.0 / std::sqrt(2.0)).margin(1e-12));
  for (double t : {0.0, 0.5, 2.0, 7.0})
    CHECK(curve.value(t) == Catch::Approx(std::exp(-rs.lambda * t)).margin(1e-10));
}

TEST_CASE("survival_reconstruction_matches_expm") {
  std::mt19937_64 rng(11);
  ChainModel chain = random_weighted_tree(8, 0.25, 4.0, rng);
  std::vector<int> set{0, 1, 2, 4};
  Matrix K = Matrix::Zero(set.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t j = 0; j < set.size(); ++j)
      K(i, j) = (i == j ? 1.0 : 0.0) - chain.P(set[i], set[j]);
  for (double t : {0.25, 1.0, 3.5}) {
    Matrix H = expm_oracle(-t * K);
    for (std::size_t i = 0; i < set.size(); ++i) {
      SurvivalCurve curve = survival_curve(chain, Start::at(set[i]), set, TimeMode::Continuous);
      CHECK(curve.value(t) == Catch::Approx(H.row(i).sum()).margin(1e-10));
    }
  }
}

TEST_CASE("threshold_times") {
  ChainModel ts = two_state();
  SurvivalCurve curve = survival_curve(ts, Start::at(0), {0}, TimeMode::Continuous);
  CHECK(curve.threshold(0.75) == Catch::Approx(std::log(4.0 / 3.0)).margin(1e-10));
  CHECK(curve.threshold(0.125) == Catch::Approx(std::log(8.0)).margin(1e-10));
  CHECK_THROWS_AS(curve.threshold(0.0), BadParams);

  SurvivalCurve disc = survival_curve(lazy(ts, 0.5), Start::at(0), {0}, TimeMode::Discrete);
  // survival after k steps is (1/2)^k
  CHECK(disc.threshold(0.3) == 2.0);
  CHECK(disc.threshold(0.5) == 1.0);  // tie resolves to the smaller step
}

TEST_CASE("expected_hitting_times") {
  ChainModel p3 = from_matrix(p3_matrix());
  CHECK(expected_hitting(p3, 1, {2}, TimeMode::Continuous, 1) == Catch::Approx(3.0));
  CHECK(expected_hitting(p3, 1, {2}, TimeMode::Discrete, 1) == Catch::Approx(3.0));
  CHECK(expected_hitting(p3, 0, {0}, TimeMode::Continuous, 1) == 0.0);

  ChainModel ts = two_state();
  CHECK(expected_hitting(ts, 0, {1}, TimeMode::Continuous, 1) == Catch::Approx(1.0));
  CHECK(expected_hitting(ts, 0, {1}, TimeMode::Continuous, 2) == Catch::Approx(2.0));
  CHECK(expected_hitting(ts, 0, {1}, TimeMode::Discrete, 2) == Catch::Approx(1.0));

  // second moment against the survival-curve integral 2 int t S(t) dt
  std::vector<int> rest{0, 1};
  SurvivalCurve curve = survival_curve(p3, Start::at(1), rest, TimeMode::Continuous);
  double m2 = 0.0;
  const int grid = 200000;
  const double horizon = 120.0;
  for (int i = 0; i < grid; ++i) {
    double t = horizon * (i + 0.5) / grid;
    m2 += 2.0 * t * curve.value(t) * horizon / grid;
  }
  CHECK(expected_hitting(p3, 1, {2}, TimeMode::Continuous, 2) == Catch::Approx(m2).margin(1e-3));
}

TEST_CASE("kac_phi_and_calibration") {
  ChainModel p3 = from_matrix(p3_matrix());
  double phi_b = p3.pi[1] * p3.P(1, 2) / (p3.pi[0] + p3.pi[1]);
  CHECK(phi_b == Catch::Approx(1.0 / 3.0));
  CHECK(phi_b * expected_hitting(p3, 1, {2}, TimeMode::Continuous, 1) == Catch::Approx(1.0));

  ChainModel ts = two_state();
  RootedTree ts_tree = root_tree(ts);
  int leaf = ts_tree.root == 0 ? 1 : 0;
  CHECK(kac_phi(ts, ts_tree, leaf) == Catch::Approx(1.0));
  CHECK(expected_hitting(ts, leaf, {ts_tree.root}, TimeMode::Continuous, 1) == Catch::Approx(1.0));

  std::mt19937_64 rng(77);
  ChainModel tree_chain = random_weighted_tree(7, 0.25, 4.0, rng);
  RootedTree rooted = root_tree(tree_chain);
  for (int v = 0; v < tree_chain.n(); ++v) {
    if (v == rooted.root) continue;
    double phi = kac_phi(tree_chain, rooted, v);
    double mean = expected_hitting(tree_chain, v, {rooted.parent[v]}, TimeMode::Continuous, 1);
    CHECK(std::abs(phi * mean - 1.0) < 1e-10);
  }
}

TEST_CASE("survival_submultiplicativity") {
  std::mt19937_64 rng(13);
  for (const ChainModel& chain :
       {families::cycle(6), two_state(), random_weighted_tree(8, 0.25, 4.0, rng)}) {
    auto family = enumerate_connected(chain, 0.5);
    for (const auto& set : family.sets) {
      std::vector<SurvivalCurve> curves;
      for (int x : set)
        curves.push_back(survival_curve(chain, Start::at(x), set, TimeMode::Continuous));
      RestrictedSpectrum rs = restricted(chain, set);
      double t = 0.8 / rs.lambda;
      double max_single = 0.0;
      for (auto& c : curves) max_single = std::max(max_single, c.value(t));
      for (int m : {2, 3})
        for (auto& c : curves) CHECK(c.value(m * t) <= std::pow(max_single, m) + 1e-10);
    }
  }
}

TEST_CASE("domination_chain_pi_below_quasi") {
  std::mt19937_64 rng(29);
  ChainModel chain = random_weighted_tree(8, 0.25, 4.0, rng);
  auto family = enumerate_connected(chain, 0.5);
  for (const auto& set : family.sets) {
    RestrictedSpectrum rs = restricted(chain, set);
    SurvivalCurve from_pi = survival_curve(chain, Start::pi_a(), set, TimeMode::Continuous);
    for (int g = 0; g <= 20; ++g) {
      double t = g * 0.3 / rs.lambda;
      CHECK(from_pi.value(t) <= std::exp(-rs.lambda * t) + 1e-10);
    }
  }
}

TEST_CASE("discrete_vs_continuous_quarter_bound") {
  ChainModel chain = families::cycle(6);
  auto family = enumerate_connected(chain, 0.5);
  for (const auto& set : family.sets) {
    for (int x : set) {
      SurvivalCurve cont = survival_curve(chain, Start::at(x), set, TimeMode::Continuous);
      SurvivalCurve disc = survival_curve(chain, Start::at(x), set, TimeMode::Discrete);
      for (long t = 1; t <= 10; ++t)
        CHECK(cont.value(static_cast<double>(t)) >= 0.25 * disc.at_step(4 * t) - 1e-10);
    }
  }
}

TEST_CASE("tree_laplace_transform_bound") {
  std::mt19937_64 rng(41);
  ChainModel chain = random_weighted_tree(9, 0.25, 4.0, rng);
  RootedTree tree = root_tree(chain);
  for (int leaf : leaves_of(tree)) {
    LeafCut cut = leaf_cut(chain, tree, leaf, 0.2);
    if (cut.component.empty()) continue;
    for (double beta : {cut.lambda / 4.0, cut.lambda / 2.0}) {
      for (int y : cut.component) {
        int z = tree.parent[y];
        SurvivalCurve curve =
            survival_curve(chain, Start::at(y), subtree_of(tree, y), TimeMode::Continuous);
        double mean = expected_hitting(chain, y, {z}, TimeMode::Continuous, 1);
        double bound = 1.0 + mean * beta * (1.0 + 2.0 * beta / cut.lambda);
        CHECK(curve.mgf(beta) <= bound + 1e-8);
        // quadrature cross-check of the closed-form transform
        double quad = 1.0;
        const int grid = 40000;
        double horizon = 60.0 / cut.lambda;
        for (int i = 0; i < grid; ++i) {
          double t = horizon * (i + 0.5) / grid;
          quad += beta * std::exp(beta * t) * curve.value(t) * horizon / grid;
        }
        CHECK(curve.mgf(beta) == Catch::Approx(quad).margin(1e-4));
      }
    }
  }
}
