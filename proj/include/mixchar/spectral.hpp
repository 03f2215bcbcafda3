#pragma once

// Eigendecomposition-backed semigroups.  Everything funnels through two
// symmetric eigenproblems:
//   * Q = (P + P*)/2 conjugated by diag(pi)^{1/2}  (discrete spectra),
//   * the negative generator diag(r)(I - P), same conjugation with the
//     stationary law of the process  (continuous-time rates).
// Restricted kernels Q_A give the bottom-of-spectrum gap lambda(A) and
// the quasi-stationary distribution mu_A.

#include <random>

#include "mixchar/chain.hpp"

namespace mixchar {

constexpr double kOrthoTol = 1e-10;
constexpr double kEigenClusterTol = 1e-11;

struct SpectralDecomposition {
  Vector eigenvalues;  // of Q, descending; eigenvalues[0] == 1
  Matrix basis;        // column i is f_i, orthonormal in L2(pi); f_1 == 1
  Vector pi;

  int n() const { return static_cast<int>(pi.size()); }

  // lambda_2 and lambda_n of Q
  double lambda2() const { return n() > 1 ? eigenvalues[1] : 1.0; }
  double lambda_min() const { return eigenvalues[n() - 1]; }
  // spectral gap of I - Q
  double gap() const { return 1.0 - lambda2(); }
};

// Continuous-time rates gamma_i of the negative generator, with the
// same pi-orthonormal basis convention (gamma[0] == 0, f_1 == 1).
struct ContinuousSpectrum {
  Vector gamma;
  Matrix basis;
  Vector pi;

  int n() const { return static_cast<int>(pi.size()); }
  double gap() const { return n() > 1 ? gamma[1] : 0.0; }
};

namespace detail {

inline Matrix time_reversal(const Matrix& P, const Vector& pi) {
  Matrix rev(P.rows(), P.cols());
  for (int x = 0; x < P.rows(); ++x)
    for (int y = 0; y < P.cols(); ++y) rev(x, y) = pi[y] * P(y, x) / pi[x];
  return rev;
}

inline Matrix additive_symmetrization(const ChainModel& chain) {
  return 0.5 * (chain.P + time_reversal(chain.P, chain.pi));
}

// Eigensystem of a pi-self-adjoint kernel K via the conjugation
// D^{1/2} K D^{-1/2}; columns of the returned basis are orthonormal in
// L2(pi).  `descending` orders by eigenvalue high-to-low.
struct SymEigen {
  Vector values;
  Matrix basis;
};

inline SymEigen pi_symmetric_eigen(const Matrix& K, const Vector& weights, bool descending) {
  const int n = static_cast<int>(K.rows());
  Vector sqrtw = weights.cwiseSqrt();
  Matrix M(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) M(x, y) = sqrtw[x] * K(x, y) / sqrtw[y];
  M = 0.5 * (M + M.transpose());  // scrub rounding asymmetry
  Eigen::SelfAdjointEigenSolver<Matrix> solver(M);
  if (solver.info() != Eigen::Success) throw NumericalFailure("symmetric eigensolver failed");
  SymEigen out;
  out.values = solver.eigenvalues();  // ascending
  out.basis = solver.eigenvectors();
  if (descending) {
    out.values.reverseInPlace();
    out.basis = out.basis.rowwise().reverse().eval();
  }
  for (int i = 0; i < n; ++i) out.basis.col(i).array() /= sqrtw.array();
  return out;
}

// Pin the top eigenpair to the exact constant function.
inline void pin_constant_mode(Vector& values, Matrix& basis, double top_value) {
  values[0] = top_value;
  basis.col(0).setOnes();
}

}  // namespace detail

inline SpectralDecomposition decompose(const ChainModel& chain) {
  if (!chain.unit_rate()) throw BadMode("decompose applies to unit-rate chains");
  SpectralDecomposition dec;
  dec.pi = chain.pi;
  Matrix Q = detail::additive_symmetrization(chain);
  auto eig = detail::pi_symmetric_eigen(Q, chain.pi, /*descending=*/true);
  dec.eigenvalues = eig.values;
  dec.basis = eig.basis;
  detail::pin_constant_mode(dec.eigenvalues, dec.basis, 1.0);
  return dec;
}

// Rates of the negative generator diag(r)(I - P).  Requires a chain that
// is reversible as a continuous-time process (unit-rate reversible, or
// any rescale of one).
inline ContinuousSpectrum continuous_spectrum(const ChainModel& chain) {
  if (!chain.reversible) throw NotReversible("continuous spectrum needs a reversible chain");
  ContinuousSpectrum spec;
  spec.pi = chain.pi;
  const int n = chain.n();
  Matrix K = Matrix::Identity(n, n) - chain.P;
  if (!chain.unit_rate()) K = chain.rates.asDiagonal() * K;
  auto eig = detail::pi_symmetric_eigen(K, chain.pi, /*descending=*/false);
  spec.gamma = eig.values.cwiseMax(0.0);
  spec.basis = eig.basis;
  detail::pin_constant_mode(spec.gamma, spec.basis, 0.0);
  return spec;
}

inline ContinuousSpectrum to_continuous(const SpectralDecomposition& dec) {
  ContinuousSpectrum spec;
  spec.pi = dec.pi;
  spec.gamma = (1.0 - dec.eigenvalues.array()).cwiseMax(0.0);
  spec.basis = dec.basis;
  return spec;
}

// H_t(x, .) = sum_i e^{-gamma_i t} f_i(x) f_i(.) pi(.)
inline Vector heat_kernel_row(const ContinuousSpectrum& spec, int x, double t) {
  if (t < 0.0) throw NegativeTime("heat kernel needs t >= 0");
  const int n = spec.n();
  Vector row = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    double w = std::exp(-spec.gamma[i] * t) * spec.basis(x, i);
    row += w * spec.basis.col(i);
  }
  row = row.cwiseProduct(spec.pi);
  // spectral reconstruction can leave -1e-17 dust
  return row.cwiseMax(0.0);
}

inline Vector heat_kernel(const ChainModel& chain, int x, double t) {
  return heat_kernel_row(continuous_spectrum(chain), x, t);
}

// density h_t(x, .) = H_t(x, .) / pi(.)
inline Vector heat_density(const ContinuousSpectrum& spec, int x, double t) {
  return heat_kernel_row(spec, x, t).cwiseQuotient(spec.pi);
}

inline Vector discrete_kernel_row(const SpectralDecomposition& dec, int x, long t) {
  if (t < 0) throw BadTime("discrete kernel needs t >= 0");
  const int n = dec.n();
  Vector row = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    double w = std::pow(dec.eigenvalues[i], static_cast<double>(t)) * dec.basis(x, i);
    row += w * dec.basis.col(i);
  }
  return row.cwiseProduct(dec.pi).cwiseMax(0.0);
}

inline Vector discrete_kernel(const ChainModel& chain, int x, long t) {
  if (!chain.unit_rate()) throw BadMode("discrete kernel needs a unit-rate chain");
  if (!chain.reversible) throw NotReversible("discrete kernel via spectral sum needs reversibility");
  return discrete_kernel_row(decompose(chain), x, t);
}

// A_t = (P^t + P^{t-1}) / 2, t >= 1
inline Vector averaged_kernel_row(const SpectralDecomposition& dec, int x, long t) {
  if (t < 1) throw BadTime("averaged kernel needs t >= 1");
  return 0.5 * (discrete_kernel_row(dec, x, t) + discrete_kernel_row(dec, x, t - 1));
}

inline Vector averaged_kernel(const ChainModel& chain, int x, long t) {
  if (!chain.unit_rate()) throw BadMode("averaged kernel needs a unit-rate chain");
  if (!chain.reversible) throw NotReversible("averaged kernel via spectral sum needs reversibility");
  return averaged_kernel_row(decompose(chain), x, t);
}

struct RelaxationTimes {
  double t_rel;           // 1 / gap(I - Q)
  double t_rel_absolute;  // max(1/|log|l2||, 1/|log|ln||); conventions below
};

// |log 0|^{-1} := 0 (one-step annihilation), |log 1|^{-1} := +inf;
// eigenvalues are snapped to the endpoints at the clustering tolerance.
inline double inverse_abs_log(double abs_eigenvalue) {
  if (abs_eigenvalue <= kEigenClusterTol) return 0.0;
  if (abs_eigenvalue >= 1.0 - kEigenClusterTol) return std::numeric_limits<double>::infinity();
  return 1.0 / std::abs(std::log(abs_eigenvalue));
}

inline RelaxationTimes relaxation_times(const SpectralDecomposition& dec) {
  RelaxationTimes out;
  double gap = dec.gap();
  out.t_rel = gap > 0.0 ? 1.0 / gap : std::numeric_limits<double>::infinity();
  if (dec.n() == 1) {
    out.t_rel_absolute = 0.0;
    return out;
  }
  out.t_rel_absolute = std::max(inverse_abs_log(std::abs(dec.lambda2())),
                                inverse_abs_log(std::abs(dec.lambda_min())));
  return out;
}

inline RelaxationTimes relaxation_times(const ChainModel& chain) {
  return relaxation_times(decompose(chain));
}

// ---------------------------------------------------------------------------
// Restricted spectra

struct RestrictedSpectrum {
  std::vector<int> set;  // sorted state indices of A
  double lambda;         // smallest eigenvalue of I - Q_A
  Vector mu;             // quasi-stationary distribution on A
  Vector gamma;          // eigenvalues of I - Q_A, ascending
  Matrix vectors;        // orthonormal eigenvectors of the conjugated Q_A
  Vector sqrt_weights;   // sqrt(pi) restricted to A

  double t_rel() const { return 1.0 / lambda; }
  double mass(const Vector& pi) const {
    double m = 0.0;
    for (int s : set) m += pi[s];
    return m;
  }
};

namespace detail {

inline Matrix restrict_matrix(const Matrix& K, const std::vector<int>& set) {
  const int m = static_cast<int>(set.size());
  Matrix sub(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) sub(i, j) = K(set[i], set[j]);
  return sub;
}

// Left Perron-Frobenius vector of the substochastic block by shifted
// power iteration (the shift handles bipartite blocks whose spectrum
// contains -eta).
inline Vector quasi_stationary(const Matrix& QA, const Vector& start) {
  const int m = static_cast<int>(QA.rows());
  Vector mu = start.cwiseAbs();
  if (mu.sum() <= 0.0) mu = Vector::Constant(m, 1.0);
  mu /= mu.sum();
  Matrix iter = QA.transpose() + Matrix::Identity(m, m);
  for (int k = 0; k < 5000; ++k) {
    Vector next = iter * mu;
    next /= next.sum();
    double delta = (next - mu).cwiseAbs().maxCoeff();
    mu = next;
    if (delta < 1e-15) break;
  }
  return mu;
}

}  // namespace detail

inline RestrictedSpectrum restricted(const ChainModel& chain, const std::vector<int>& set) {
  if (!chain.unit_rate()) throw BadMode("restricted spectra apply to unit-rate chains");
  if (set.empty() || static_cast<int>(set.size()) >= chain.n())
    throw EmptyOrFullSet("restricted spectrum needs a proper nonempty subset");
  RestrictedSpectrum out;
  out.set = set;
  std::sort(out.set.begin(), out.set.end());
  Matrix Q = detail::additive_symmetrization(chain);
  Matrix QA = detail::restrict_matrix(Q, out.set);
  const int m = static_cast<int>(out.set.size());
  Vector w(m);
  for (int i = 0; i < m; ++i) w[i] = chain.pi[out.set[i]];
  auto eig = detail::pi_symmetric_eigen(QA, w, /*descending=*/true);
  out.gamma = 1.0 - eig.values.array();  // ascending rates, aligned with columns
  out.lambda = out.gamma[0];
  out.sqrt_weights = w.cwiseSqrt();
  out.vectors = eig.basis;  // w-orthonormal eigenvectors of Q_A
  Vector pf_start = eig.basis.col(0).cwiseProduct(w).cwiseAbs();
  out.mu = detail::quasi_stationary(QA, pf_start);
  return out;
}

// The restricted gap alone, reusing a precomputed symmetrization; this is
// the inner loop of the kappa-type maximizations.
inline double restricted_gap(const Matrix& Q, const Vector& pi, const std::vector<int>& set) {
  Matrix QA = detail::restrict_matrix(Q, set);
  const int m = static_cast<int>(QA.rows());
  Vector sqrtw(m);
  for (int i = 0; i < m; ++i) sqrtw[i] = std::sqrt(pi[set[i]]);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) QA(i, j) *= sqrtw[i] / sqrtw[j];
  QA = 0.5 * (QA + QA.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(QA, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalFailure("restricted eigensolver failed");
  return 1.0 - solver.eigenvalues().maxCoeff();
}

// ---------------------------------------------------------------------------
// 2 -> q operator norm estimation (lower bound with witness)

struct NormEstimate {
  double value = 0.0;
  Vector witness;          // f >= 0 with ||f||_2 = 1
  int restarts = 0;
  double dispersion = 0.0; // best - median over restarts
};

namespace detail {

inline Vector semigroup_apply(const ContinuousSpectrum& spec, double t, const Vector& f) {
  const int n = spec.n();
  Vector out = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    double coeff = 0.0;
    for (int x = 0; x < n; ++x) coeff += spec.pi[x] * spec.basis(x, i) * f[x];
    out += std::exp(-spec.gamma[i] * t) * coeff * spec.basis.col(i);
  }
  return out;
}

inline double lp_norm(const Vector& f, const Vector& pi, double p) {
  double acc = 0.0;
  for (int x = 0; x < f.size(); ++x) acc += pi[x] * std::pow(std::abs(f[x]), p);
  return std::pow(acc, 1.0 / p);
}

}  // namespace detail

// Projected ascent of ||S_t f||_q over {f >= 0, ||f||_2 = 1}.  Positivity
// is WLOG because S_t preserves positivity and |S_t f| <= S_t |f|.  The
// result is a certified lower bound on the true norm.
inline NormEstimate two_q_norm(const ChainModel& chain, double t, double q,
                               std::uint64_t seed = kDefaultSeed) {
  if (!(q > 2.0)) throw BadParams("two_q_norm needs q > 2");
  if (t < 0.0) throw NegativeTime("two_q_norm needs t >= 0");
  ContinuousSpectrum spec = continuous_spectrum(chain);
  const int n = chain.n();
  const Vector& pi = spec.pi;

  auto objective = [&](const Vector& f) {
    return detail::lp_norm(detail::semigroup_apply(spec, t, f), pi, q);
  };
  auto normalize = [&](Vector f) {
    f = f.cwiseMax(0.0);
    double norm2 = detail::lp_norm(f, pi, 2.0);
    if (norm2 <= 0.0) f = Vector::Ones(n);
    else f /= norm2;
    return f;
  };

  std::vector<Vector> starts;
  starts.push_back(Vector::Ones(n));  // pins the estimate at >= 1
  for (int x = 0; x < n; ++x) {
    Vector f = Vector::Zero(n);
    f[x] = 1.0 / std::sqrt(pi[x]);  // indicator density, unit 2-norm
    starts.push_back(f);
  }
  if (n > 1) {
    for (double shift : {0.25, 1.0, 4.0}) {
      starts.push_back(normalize(spec.basis.col(1).cwiseAbs() + Vector::Constant(n, shift)));
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int r = 0; r < 32; ++r) {
    Vector f(n);
    for (int x = 0; x < n; ++x) f[x] = unif(rng);
    starts.push_back(normalize(f));
  }

  std::vector<double> values(starts.size());
  std::vector<Vector> witnesses(starts.size());
  parallel_for(starts.size(), [&](std::size_t s) {
    Vector f = normalize(starts[s]);
    double val = objective(f);
    double step = 0.5;
    for (int iter = 0; iter < 500; ++iter) {
      Vector g = detail::semigroup_apply(spec, t, f);
      double norm_q = detail::lp_norm(g, pi, q);
      // pi-gradient of ||S_t f||_q at f: ||g||^{1-q} S_t(g^{q-1})
      Vector gq = g.cwiseAbs().array().pow(q - 1.0);
      for (int x = 0; x < n; ++x) gq[x] = g[x] >= 0.0 ? gq[x] : -gq[x];
      Vector grad = std::pow(norm_q, 1.0 - q) * detail::semigroup_apply(spec, t, gq);
      bool improved = false;
      while (step > 1e-14) {
        Vector cand = normalize(f + step * grad);
        double cand_val = objective(cand);
        if (cand_val > val + 1e-15) {
          f = cand;
          val = cand_val;
          improved = true;
          step *= 1.3;
          break;
        }
        step *= 0.5;
      }
      if (!improved || step <= 1e-14) break;
    }
    values[s] = val;
    witnesses[s] = f;
  });

  NormEstimate best;
  best.restarts = static_cast<int>(starts.size());
  std::size_t argbest = 0;
  for (std::size_t s = 0; s < starts.size(); ++s)
    if (values[s] > values[argbest]) argbest = s;
  best.value = values[argbest];
  best.witness = witnesses[argbest];
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  best.dispersion = best.value - sorted[sorted.size() / 2];
  return best;
}

}  // namespace mixchar
