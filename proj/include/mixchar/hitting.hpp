#pragma once

// Exact hitting-time survival curves P[T_{A^c} > t], threshold times and
// expected hitting times, in continuous and discrete time.  Continuous
// curves are exponential sums from the restricted spectrum of the
// negative generator; discrete curves iterate the substochastic block.

#include "mixchar/sets.hpp"
#include "mixchar/spectral.hpp"

namespace mixchar {

enum class TimeMode { Continuous, Discrete };

// Start of a survival curve: a single state, pi conditioned on A, or the
// quasi-stationary distribution of A.
struct Start {
  enum class Kind { State, PiA, QuasiStationary } kind = Kind::State;
  int state = -1;

  static Start at(int x) { return {Kind::State, x}; }
  static Start pi_a() { return {Kind::PiA, -1}; }
  static Start quasi_stationary() { return {Kind::QuasiStationary, -1}; }
};

class SurvivalCurve {
 public:
  static SurvivalCurve continuous(Vector gamma, Vector coeff) {
    SurvivalCurve c;
    c.mode_ = TimeMode::Continuous;
    c.gamma_ = std::move(gamma);
    c.coeff_ = std::move(coeff);
    return c;
  }

  static SurvivalCurve discrete(Matrix sub, Vector nu) {
    SurvivalCurve c;
    c.mode_ = TimeMode::Discrete;
    c.sub_ = std::move(sub);
    c.state_ = std::move(nu);
    c.probs_.push_back(c.state_.sum());
    return c;
  }

  static SurvivalCurve zero() {
    SurvivalCurve c;
    c.mode_ = TimeMode::Continuous;
    c.gamma_ = Vector::Zero(1);
    c.coeff_ = Vector::Zero(1);
    return c;
  }

  TimeMode mode() const { return mode_; }
  double smallest_rate() const {
    return mode_ == TimeMode::Continuous && gamma_.size() > 0 ? std::max(gamma_[0], 1e-300) : 1.0;
  }

  double value(double t) const {
    if (t < 0.0) throw NegativeTime("survival needs t >= 0");
    if (mode_ == TimeMode::Discrete) {
      double rounded = std::round(t);
      if (std::abs(t - rounded) > 1e-9) throw BadTime("discrete survival needs integer t");
      return at_step(static_cast<long>(rounded));
    }
    double s = 0.0;
    for (int i = 0; i < gamma_.size(); ++i) s += coeff_[i] * std::exp(-gamma_[i] * t);
    return std::clamp(s, 0.0, 1.0);
  }

  double at_step(long k) const {
    if (k < 0) throw BadTime("discrete survival needs k >= 0");
    while (static_cast<long>(probs_.size()) <= k) {
      state_ = sub_.transpose() * state_;
      probs_.push_back(state_.sum());
    }
    return probs_[static_cast<std::size_t>(k)];
  }

  // min { t : survival(t) <= target }; integer-valued in discrete mode,
  // ties resolving to the smaller step.
  double threshold(double target) const {
    if (!(target > 0.0 && target < 1.0)) throw BadParams("threshold target must be in (0,1)");
    if (mode_ == TimeMode::Discrete) {
      for (long k = 0; k <= 10000000L; ++k)
        if (at_step(k) <= target) return static_cast<double>(k);
      throw NumericalFailure("discrete threshold scan exceeded cap");
    }
    if (value(0.0) <= target) return 0.0;
    double hi = 1.0 / smallest_rate();
    int doublings = 0;
    while (value(hi) > target) {
      hi *= 2.0;
      if (++doublings > 200) throw NumericalFailure("threshold bracket failed to close");
    }
    double lo = 0.0;
    while (hi - lo > 1e-13 + 1e-12 * hi) {
      double mid = 0.5 * (lo + hi);
      (value(mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  // E[e^{beta T}] for beta below the smallest rate (continuous mode):
  // 1 + beta * sum_i c_i / (gamma_i - beta), exact for exponential sums.
  double mgf(double beta) const {
    if (mode_ != TimeMode::Continuous) throw BadMode("mgf is defined for continuous curves");
    if (!(beta < smallest_rate())) throw DomainError("mgf needs beta < smallest rate");
    double acc = 0.0;
    for (int i = 0; i < gamma_.size(); ++i) acc += coeff_[i] / (gamma_[i] - beta);
    return 1.0 + beta * acc;
  }

  const Vector& rates() const { return gamma_; }
  const Vector& coefficients() const { return coeff_; }

 private:
  SurvivalCurve() = default;
  TimeMode mode_ = TimeMode::Continuous;
  Vector gamma_;  // ascending rates
  Vector coeff_;  // survival(t) = sum_i coeff_i e^{-gamma_i t}
  Matrix sub_;    // substochastic block (discrete mode)
  mutable std::vector<double> probs_;
  mutable Vector state_;
};

namespace detail {

struct RestrictedGenerator {
  std::vector<int> set;
  Vector gamma;       // ascending rates of the restricted negative generator
  Matrix basis;       // w-orthonormal eigenvectors (w = process pi on A)
  Vector weights;     // process pi restricted to A (not renormalized)
  Vector ones_coeff;  // <b_i, 1>_w
};

inline RestrictedGenerator restricted_generator(const ChainModel& chain,
                                                const std::vector<int>& set) {
  if (set.empty()) throw EmptySet("survival needs a nonempty set");
  if (static_cast<int>(set.size()) >= chain.n())
    throw EmptyOrFullSet("survival needs a proper subset");
  RestrictedGenerator out;
  out.set = set;
  std::sort(out.set.begin(), out.set.end());
  const int m = static_cast<int>(out.set.size());
  Matrix K(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      K(i, j) = chain.rate(out.set[i]) * ((i == j ? 1.0 : 0.0) - chain.P(out.set[i], out.set[j]));
  out.weights = Vector(m);
  for (int i = 0; i < m; ++i) out.weights[i] = chain.pi[out.set[i]];
  auto eig = pi_symmetric_eigen(K, out.weights, /*descending=*/false);
  out.gamma = eig.values;
  out.basis = eig.basis;
  out.ones_coeff = Vector(m);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int x = 0; x < m; ++x) acc += out.weights[x] * out.basis(x, i);
    out.ones_coeff[i] = acc;
  }
  return out;
}

// Returns the start distribution restricted to the (sorted) set, or an
// empty optional when the start state lies outside A.
inline std::optional<Vector> start_vector(const ChainModel& chain, const std::vector<int>& sorted,
                                          const Start& start) {
  const int m = static_cast<int>(sorted.size());
  switch (start.kind) {
    case Start::Kind::State: {
      auto it = std::lower_bound(sorted.begin(), sorted.end(), start.state);
      if (it == sorted.end() || *it != start.state) return std::nullopt;
      Vector nu = Vector::Zero(m);
      nu[static_cast<int>(it - sorted.begin())] = 1.0;
      return nu;
    }
    case Start::Kind::PiA: {
      Vector nu(m);
      for (int i = 0; i < m; ++i) nu[i] = chain.pi[sorted[i]];
      return Vector(nu / nu.sum());
    }
    case Start::Kind::QuasiStationary:
      return restricted(chain, sorted).mu;
  }
  return std::nullopt;
}

}  // namespace detail

// Survival curve of T_{A^c} (time to leave A) from the given start.  A
// start state outside A yields the identically-zero curve.
inline SurvivalCurve survival_curve(const ChainModel& chain, const Start& start,
                                    const std::vector<int>& set, TimeMode mode) {
  std::vector<int> sorted = set;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty()) throw EmptySet("survival needs a nonempty set");

  if (mode == TimeMode::Discrete) {
    if (!chain.unit_rate()) throw BadMode("discrete survival needs a unit-rate chain");
    auto nu = detail::start_vector(chain, sorted, start);
    if (!nu) return SurvivalCurve::zero();
    Matrix sub(sorted.size(), sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      for (std::size_t j = 0; j < sorted.size(); ++j) sub(i, j) = chain.P(sorted[i], sorted[j]);
    return SurvivalCurve::discrete(std::move(sub), std::move(*nu));
  }

  auto gen = detail::restricted_generator(chain, sorted);
  auto nu = detail::start_vector(chain, gen.set, start);
  if (!nu) return SurvivalCurve::zero();
  const int m = static_cast<int>(gen.set.size());
  Vector coeff = Vector::Zero(m);
  for (int i = 0; i < m; ++i) {
    double nu_coeff = 0.0;
    for (int x = 0; x < m; ++x) nu_coeff += (*nu)[x] * gen.basis(x, i);
    coeff[i] = nu_coeff * gen.ones_coeff[i];
  }
  return SurvivalCurve::continuous(gen.gamma, std::move(coeff));
}

inline double survival(const ChainModel& chain, const Start& start, const std::vector<int>& set,
                       double t, TimeMode mode) {
  return survival_curve(chain, start, set, mode).value(t);
}

inline double threshold_time(const SurvivalCurve& curve, double target) {
  return curve.threshold(target);
}

// First or second moment of the hitting time of B.  Continuous time
// solves the restricted negative-generator system (I - P scaled by the
// jump rates); discrete time the standard step-count recursions.
inline double expected_hitting(const ChainModel& chain, int start, const std::vector<int>& target,
                               TimeMode mode, int moment = 1) {
  if (target.empty()) throw EmptySet("expected_hitting needs a nonempty target");
  if (moment != 1 && moment != 2) throw BadParams("moment must be 1 or 2");
  if (mode == TimeMode::Discrete && !chain.unit_rate())
    throw BadMode("discrete hitting needs a unit-rate chain");
  std::vector<char> in_target(chain.n(), 0);
  for (int b : target) in_target[b] = 1;
  if (in_target[start]) return 0.0;
  std::vector<int> rest;
  for (int x = 0; x < chain.n(); ++x)
    if (!in_target[x]) rest.push_back(x);
  const int m = static_cast<int>(rest.size());
  Matrix sub(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) sub(i, j) = chain.P(rest[i], rest[j]);
  Matrix K = Matrix::Identity(m, m) - sub;
  if (mode == TimeMode::Continuous && !chain.unit_rate()) {
    for (int i = 0; i < m; ++i) K.row(i) *= chain.rates[rest[i]];
  }
  Eigen::PartialPivLU<Matrix> lu(K);
  Vector h1 = lu.solve(Vector::Ones(m));
  if (!h1.allFinite()) throw Singular("hitting-time system is singular");
  int pos = static_cast<int>(std::find(rest.begin(), rest.end(), start) - rest.begin());
  if (moment == 1) return h1[pos];
  Vector h2;
  if (mode == TimeMode::Continuous) {
    h2 = 2.0 * lu.solve(h1);  // E[T^2] = 2 (-G)^{-2} 1
  } else {
    h2 = lu.solve(Vector::Ones(m) + 2.0 * (sub * h1));
  }
  if (!h2.allFinite()) throw Singular("hitting-time system is singular");
  return h2[pos];
}

// Flow ratio across a tree edge: Phi(T_y) = pi(y) P(y, z) / pi(T_y),
// where z is y's parent; Phi(T_y) E_y[T_z] = 1 is the calibration.
// Defined in trees.hpp which owns the rooted-tree structure.

}  // namespace mixchar
