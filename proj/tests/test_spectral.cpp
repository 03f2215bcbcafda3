#include <catch2/catch_amalgamated.hpp>

#include "mixchar/sets.hpp"
#include "mixchar/spectral.hpp"

using namespace mixchar;

namespace {

Matrix p3_matrix() {
  Matrix P(3, 3);
  P << 0, 1, 0, 0.5, 0, 0.5, 0, 1, 0;
  return P;
}

// dense matrix exponential by scaling and squaring with a high-order
// Taylor core; oracle for the spectral heat kernels
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

TEST_CASE("decompose_small_chains") {
  ChainModel ts = two_state();
  SpectralDecomposition dec = decompose(ts);
  CHECK(dec.eigenvalues[0] == Catch::Approx(1.0));
  CHECK(dec.eigenvalues[1] == Catch::Approx(-1.0).margin(1e-13));
  // f2 = (1, -1) up to sign
  CHECK(std::abs(dec.basis(0, 1)) == Catch::Approx(1.0).margin(1e-12));
  CHECK(dec.basis(0, 1) * dec.basis(1, 1) == Catch::Approx(-1.0).margin(1e-12));

  ChainModel p3 = from_matrix(p3_matrix());
  SpectralDecomposition dp3 = decompose(p3);
  CHECK(dp3.eigenvalues[0] == Catch::Approx(1.0));
  CHECK(dp3.eigenvalues[1] == Catch::Approx(0.0).margin(1e-13));
  CHECK(dp3.eigenvalues[2] == Catch::Approx(-1.0).margin(1e-13));
  // hand eigenvectors (1,1,1), (1,0,-1), (1,-1,1) after pi-normalization
  Vector f2 = dp3.basis.col(1);
  CHECK(f2[1] == Catch::Approx(0.0).margin(1e-12));
  CHECK(f2[0] * f2[2] < 0.0);

  ChainModel k3 = families::clique(3);
  SpectralDecomposition dk3 = decompose(k3);
  CHECK(dk3.eigenvalues[1] == Catch::Approx(-0.5).margin(1e-13));
  CHECK(dk3.eigenvalues[2] == Catch::Approx(-0.5).margin(1e-13));
}

TEST_CASE("decomposition_invariants") {
  std::mt19937_64 rng(99);
  for (const ChainModel& chain :
       {families::cycle(5), families::hypercube(3), random_weighted_tree(9, 0.25, 4.0, rng)}) {
    SpectralDecomposition dec = decompose(chain);
    const int n = dec.n();
    // pi-orthonormality
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        double ip = (chain.pi.array() * dec.basis.col(i).array() * dec.basis.col(j).array()).sum();
        CHECK(ip == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-10));
      }
    // reconstruction of Q
    Matrix Q = detail::additive_symmetrization(chain);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        double rec = 0.0;
        for (int i = 0; i < n; ++i)
          rec += dec.eigenvalues[i] * dec.basis(x, i) * dec.basis(y, i) * chain.pi[y];
        CHECK(rec == Catch::Approx(Q(x, y)).margin(1e-10));
      }
    CHECK(dec.eigenvalues[0] == Catch::Approx(1.0));
    for (int x = 0; x < n; ++x) CHECK(dec.basis(x, 0) == Catch::Approx(1.0));
  }
}

TEST_CASE("heat_kernel_values") {
  ChainModel ts = two_state();
  ContinuousSpectrum spec = continuous_spectrum(ts);
  // point mass at t = 0
  Vector row0 = heat_kernel_row(spec, 0, 0.0);
  CHECK(row0[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(row0[1] == Catch::Approx(0.0).margin(1e-12));
  // h_t(x,x) = 1 + e^{-2t}
  for (double t : {0.1, 0.7, 2.0}) {
    Vector row = heat_kernel_row(spec, 0, t);
    CHECK(row[0] / ts.pi[0] == Catch::Approx(1.0 + std::exp(-2.0 * t)).margin(1e-12));
    CHECK(row.sum() == Catch::Approx(1.0).margin(1e-12));
  }
  CHECK_THROWS_AS(heat_kernel_row(spec, 0, -0.5), NegativeTime);

  // spectral tail: |H_t(x,y) - pi(y)| <= e^{-t/t_rel} / pi_*, so the
  // kernel is flat to tol once t >= t_rel (log(1/pi_*) + log(1/tol))
  ChainModel p3 = from_matrix(p3_matrix());
  ContinuousSpectrum sp3 = continuous_spectrum(p3);
  double t_rel = 1.0 / sp3.gap();
  double t = t_rel * (std::log(1.0 / p3.min_pi()) + std::log(1e8));
  Vector row = heat_kernel_row(sp3, 0, t);
  for (int y = 0; y < 3; ++y) CHECK(std::abs(row[y] - p3.pi[y]) < 1e-8);
  // the ten-relaxation-times form reaches 1e-8 once pi_*^9 does
  ChainModel h3 = families::hypercube(3);
  ContinuousSpectrum sh3 = continuous_spectrum(h3);
  double t10 = 10.0 / sh3.gap() * std::log(1.0 / h3.min_pi());
  Vector hrow = heat_kernel_row(sh3, 0, t10);
  for (int y = 0; y < h3.n(); ++y) CHECK(std::abs(hrow[y] - h3.pi[y]) < 1e-8);
}

TEST_CASE("heat_kernel_matches_expm") {
  std::mt19937_64 rng(3);
  ChainModel chain = random_weighted_tree(7, 0.5, 2.0, rng);
  ContinuousSpectrum spec = continuous_spectrum(chain);
  const int n = chain.n();
  for (double t : {0.2, 1.0, 3.0}) {
    Matrix H = expm_oracle(-t * (Matrix::Identity(n, n) - chain.P));
    for (int x = 0; x < n; ++x) {
      Vector row = heat_kernel_row(spec, x, t);
      for (int y = 0; y < n; ++y) CHECK(row[y] == Catch::Approx(H(x, y)).margin(1e-10));
    }
  }
}

TEST_CASE("discrete_and_averaged_kernels") {
  ChainModel ts = two_state();
  SpectralDecomposition dec = decompose(ts);
  Vector a1 = averaged_kernel_row(dec, 0, 1);
  CHECK(a1[0] == Catch::Approx(0.5).margin(1e-13));
  CHECK(a1[1] == Catch::Approx(0.5).margin(1e-13));
  Vector p2 = discrete_kernel_row(dec, 0, 2);
  CHECK(p2[0] == Catch::Approx(1.0).margin(1e-13));

  // matrix-power oracle on the 3-path
  ChainModel p3 = from_matrix(p3_matrix());
  SpectralDecomposition dp3 = decompose(p3);
  Matrix power = Matrix::Identity(3, 3);
  for (int k = 0; k <= 5; ++k) {
    for (int x = 0; x < 3; ++x) {
      Vector row = discrete_kernel_row(dp3, x, k);
      for (int y = 0; y < 3; ++y) CHECK(row[y] == Catch::Approx(power(x, y)).margin(1e-12));
    }
    power = power * p3.P;
  }
  CHECK_THROWS_AS(averaged_kernel_row(dp3, 0, 0), BadTime);
}

TEST_CASE("relaxation_times_conventions") {
  RelaxationTimes ts_times = relaxation_times(two_state());
  CHECK(ts_times.t_rel == Catch::Approx(0.5));
  CHECK(std::isinf(ts_times.t_rel_absolute));

  RelaxationTimes lazy_times = relaxation_times(lazy(two_state(), 0.5));
  CHECK(lazy_times.t_rel == Catch::Approx(1.0));
  CHECK(lazy_times.t_rel_absolute == Catch::Approx(0.0));

  RelaxationTimes k3_times = relaxation_times(families::clique(3));
  CHECK(k3_times.t_rel == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("restricted_spectra") {
  ChainModel ts = two_state();
  RestrictedSpectrum single = restricted(ts, {0});
  CHECK(single.lambda == Catch::Approx(1.0));
  CHECK(single.mu[0] == Catch::Approx(1.0));

  ChainModel p3 = from_matrix(p3_matrix());
  RestrictedSpectrum ab = restricted(p3, {0, 1});
  // 2x2 block [[0,1],[1/2,0]]: top eigenvalue 1/sqrt(2)
  CHECK(ab.lambda == Catch::Approx(1.0 - 1.0 / std::sqrt(2.0)).margin(1e-12));
  CHECK(ab.mu[0] == Catch::Approx(std::sqrt(2.0) - 1.0).margin(1e-10));
  CHECK(ab.mu[1] == Catch::Approx(2.0 - std::sqrt(2.0)).margin(1e-10));
  // left eigenvector property mu Q_A = (1 - lambda) mu
  Matrix QA(2, 2);
  QA << 0, 1, 0.5, 0;
  Vector muq = QA.transpose() * ab.mu;
  for (int i = 0; i < 2; ++i)
    CHECK(muq[i] == Catch::Approx((1.0 - ab.lambda) * ab.mu[i]).margin(1e-10));

  RestrictedSpectrum b_only = restricted(p3, {1});
  CHECK(b_only.lambda == Catch::Approx(1.0));

  CHECK_THROWS_AS(restricted(p3, {0, 1, 2}), EmptyOrFullSet);
  CHECK_THROWS_AS(restricted(p3, {}), EmptyOrFullSet);
}

TEST_CASE("restricted_survival_domination") {
  std::mt19937_64 rng(17);
  ChainModel chain = random_weighted_tree(8, 0.25, 4.0, rng);
  auto family_sets = brute_force_connected(chain, 0.5);
  for (const auto& set : family_sets) {
    if (static_cast<int>(set.size()) >= chain.n()) continue;
    RestrictedSpectrum rs = restricted(chain, set);
    // pi_A Q_A^k 1_A <= (1 - lambda)^k
    Vector piA(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) piA[i] = chain.pi[set[i]];
    piA /= piA.sum();
    Matrix QA = detail::restrict_matrix(detail::additive_symmetrization(chain), set);
    Vector state = piA;
    for (long k = 0; k <= 50; ++k) {
      CHECK(state.sum() <= std::pow(1.0 - rs.lambda, static_cast<double>(k)) + 1e-12);
      state = QA.transpose() * state;
    }
  }
}

TEST_CASE("two_q_norm_estimates") {
  ChainModel ts = two_state();
  // t = 0, q = 4: the norm is pi_*^{-1/4}; 2-point grid oracle
  double oracle = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    double theta = 0.5 * M_PI * i / 2000;
    Vector f(2);
    f[0] = std::sqrt(2.0) * std::cos(theta);
    f[1] = std::sqrt(2.0) * std::sin(theta);  // ||f||_2 = 1
    double norm4 = std::pow(0.5 * (std::pow(f[0], 4.0) + std::pow(f[1], 4.0)), 0.25);
    oracle = std::max(oracle, norm4);
  }
  NormEstimate est = two_q_norm(ts, 0.0, 4.0);
  CHECK(oracle == Catch::Approx(std::pow(2.0, 0.25)).margin(1e-6));
  CHECK(est.value == Catch::Approx(std::pow(2.0, 0.25)).margin(1e-7));

  // t large: the semigroup collapses to the mean, norm -> 1
  NormEstimate late = two_q_norm(ts, 40.0, 4.0);
  CHECK(late.value == Catch::Approx(1.0).margin(1e-6));

  CHECK_THROWS_AS(two_q_norm(ts, 1.0, 2.0), BadParams);
}
