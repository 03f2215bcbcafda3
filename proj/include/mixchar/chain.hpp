#pragma once

// Finite reversible Markov chains: construction from matrices, weighted
// networks and named families, plus the generator-form row rescaling.
//
// A ChainModel holds the jump matrix P, the stationary distribution of
// the process, and (optionally) per-state jump rates.  With unit rates
// the process is the usual chain: discrete steps by P, continuous time
// by exp(-t(I-P)).  With rates r the generator is diag(r)(P - I); the
// discrete-time operations reject such chains.

#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>

#include "mixchar/common.hpp"

namespace mixchar {

constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryTol = 1e-10;
constexpr double kReversibleTol = 1e-12;

struct ChainModel {
  std::vector<std::string> states;
  Matrix P;       // row-stochastic jump matrix
  Vector pi;      // stationary distribution of the process
  Vector rates;   // per-state jump rates; size 0 means unit rates
  bool reversible = false;
  std::string source;  // matrix | network | family | rescale

  int n() const { return static_cast<int>(states.size()); }
  bool unit_rate() const { return rates.size() == 0; }
  double rate(int x) const { return unit_rate() ? 1.0 : rates[x]; }
  double min_pi() const { return pi.minCoeff(); }

  int index_of(const std::string& label) const {
    for (int i = 0; i < n(); ++i)
      if (states[i] == label) return i;
    throw BadParams("unknown state label: " + label);
  }
};

struct WeightedNetwork {
  std::vector<std::string> vertices;
  // (u, v, conductance); self-loops allowed
  std::vector<std::tuple<std::string, std::string, double>> edges;
};

namespace detail {

inline void check_square_nonneg(const Matrix& P) {
  if (P.rows() != P.cols() || P.rows() == 0)
    throw BadParams("transition matrix must be square and non-empty");
  for (int i = 0; i < P.rows(); ++i) {
    double row = 0.0;
    for (int j = 0; j < P.cols(); ++j) {
      if (P(i, j) < 0.0) throw NotStochastic("negative entry in row " + std::to_string(i));
      row += P(i, j);
    }
    if (std::abs(row - 1.0) > kRowSumTol)
      throw NotStochastic("row " + std::to_string(i) + " sums to " + std::to_string(row));
  }
}

// Tarjan SCC count on the support digraph of P.
inline int scc_count(const Matrix& P) {
  const int n = static_cast<int>(P.rows());
  std::vector<int> index(n, -1), low(n, 0), stack_flag(n, 0);
  std::vector<int> stk;
  int next_index = 0, count = 0;
  struct Frame { int v; int child; };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> frames{{root, 0}};
    index[root] = low[root] = next_index++;
    stk.push_back(root);
    stack_flag[root] = 1;
    while (!frames.empty()) {
      auto& [v, child] = frames.back();
      if (child < n) {
        int w = child++;
        if (P(v, w) <= 0.0 || w == v) continue;
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stk.push_back(w);
          stack_flag[w] = 1;
          frames.push_back({w, 0});
        } else if (stack_flag[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      } else {
        if (low[v] == index[v]) {
          ++count;
          for (;;) {
            int w = stk.back();
            stk.pop_back();
            stack_flag[w] = 0;
            if (w == v) break;
          }
        }
        int finished = v;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[finished]);
      }
    }
  }
  return count;
}

// Stationary distribution: short power iteration on the half-lazy
// transpose for a good start, then one exact linear solve.
inline Vector stationary_distribution(const Matrix& P) {
  const int n = static_cast<int>(P.rows());
  Vector v = Vector::Constant(n, 1.0 / n);
  Matrix half = 0.5 * (P.transpose() + Matrix::Identity(n, n));
  for (int iter = 0; iter < 200; ++iter) {
    Vector next = half * v;
    next /= next.sum();
    double delta = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (delta < 1e-13) break;
  }
  // Refine: solve (P^T - I) pi = 0 with the normalization sum(pi) = 1
  // replacing the last (redundant) equation.
  Matrix A = P.transpose() - Matrix::Identity(n, n);
  A.row(n - 1).setOnes();
  Vector b = Vector::Zero(n);
  b[n - 1] = 1.0;
  Eigen::FullPivLU<Matrix> lu(A);
  if (lu.isInvertible()) {
    Vector exact = lu.solve(b);
    if (exact.minCoeff() > 0.0) v = exact;
  }
  v /= v.sum();
  return v;
}

inline bool detailed_balance(const Matrix& P, const Vector& pi, double tol) {
  for (int x = 0; x < P.rows(); ++x)
    for (int y = 0; y < x; ++y)
      if (std::abs(pi[x] * P(x, y) - pi[y] * P(y, x)) > tol) return false;
  return true;
}

inline void validate(const ChainModel& chain) {
  check_square_nonneg(chain.P);
  if (static_cast<int>(chain.states.size()) != chain.P.rows())
    throw BadParams("state count does not match matrix size");
  if (chain.pi.minCoeff() <= 0.0) throw Reducible("stationary distribution not strictly positive");
  if (std::abs(chain.pi.sum() - 1.0) > 1e-10) throw BadParams("pi does not sum to 1");
  // Stationarity: pi P = pi with unit rates; with rates r the invariant
  // measure of the jump chain is pi .* r up to normalization.
  Vector m = chain.unit_rate() ? chain.pi : Vector(chain.pi.cwiseProduct(chain.rates));
  m /= m.sum();
  Vector res = chain.P.transpose() * m - m;
  if (res.cwiseAbs().maxCoeff() > kStationaryTol)
    throw BadParams("stationarity residual too large");
}

}  // namespace detail

inline ChainModel from_matrix(const Matrix& P) {
  detail::check_square_nonneg(P);
  if (detail::scc_count(P) > 1) throw Reducible("transition matrix is not irreducible");
  ChainModel chain;
  chain.P = P;
  chain.pi = detail::stationary_distribution(P);
  for (int i = 0; i < P.rows(); ++i) chain.states.push_back("s" + std::to_string(i));
  chain.reversible = detail::detailed_balance(P, chain.pi, kReversibleTol);
  chain.source = "matrix";
  detail::validate(chain);
  return chain;
}

inline ChainModel from_network(const WeightedNetwork& net) {
  if (net.vertices.empty()) throw BadParams("empty network");
  std::map<std::string, int> id;
  for (const auto& v : net.vertices) {
    if (id.count(v)) throw BadParams("duplicate vertex label: " + v);
    id[v] = static_cast<int>(id.size());
  }
  const int n = static_cast<int>(net.vertices.size());
  Matrix c = Matrix::Zero(n, n);
  for (const auto& [us, vs, w] : net.edges) {
    if (!(w > 0.0)) throw BadParams("conductance must be positive");
    auto iu = id.find(us), iv = id.find(vs);
    if (iu == id.end() || iv == id.end()) throw BadParams("edge references unknown vertex");
    int u = iu->second, v = iv->second;
    c(u, v) += w;
    if (u != v) c(v, u) += w;
  }
  Vector cv = c.rowwise().sum();
  if (cv.minCoeff() <= 0.0) throw Disconnected("isolated vertex");
  // undirected connectivity
  std::vector<int> seen(n, 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  while (!queue.empty()) {
    int u = queue.back();
    queue.pop_back();
    for (int v = 0; v < n; ++v)
      if (c(u, v) > 0.0 && !seen[v]) {
        seen[v] = 1;
        queue.push_back(v);
      }
  }
  if (std::accumulate(seen.begin(), seen.end(), 0) != n)
    throw Disconnected("network is not connected");

  ChainModel chain;
  chain.states = net.vertices;
  chain.P = c.array().colwise() / cv.array();
  chain.pi = cv / cv.sum();
  chain.reversible = true;
  chain.source = "network";
  detail::validate(chain);
  return chain;
}

inline ChainModel lazy(const ChainModel& base, double a) {
  if (!(a >= 0.0 && a < 1.0)) throw BadParams("laziness parameter must be in [0,1)");
  if (!base.unit_rate()) throw BadParams("lazy() expects a unit-rate chain");
  ChainModel chain = base;
  chain.P = a * Matrix::Identity(base.n(), base.n()) + (1.0 - a) * base.P;
  chain.source = "family";
  detail::validate(chain);
  return chain;
}

namespace families {

inline ChainModel cycle(int n) {
  if (n < 2) throw BadParams("cycle needs n >= 2");
  WeightedNetwork net;
  for (int i = 0; i < n; ++i) net.vertices.push_back("v" + std::to_string(i));
  for (int i = 0; i < n; ++i) net.edges.push_back({net.vertices[i], net.vertices[(i + 1) % n], 1.0});
  ChainModel chain = from_network(net);
  chain.source = "family";
  return chain;
}

inline ChainModel path(int n) {
  if (n < 2) throw BadParams("path needs n >= 2");
  WeightedNetwork net;
  for (int i = 0; i < n; ++i) net.vertices.push_back("v" + std::to_string(i));
  for (int i = 0; i + 1 < n; ++i) net.edges.push_back({net.vertices[i], net.vertices[i + 1], 1.0});
  ChainModel chain = from_network(net);
  chain.source = "family";
  return chain;
}

inline ChainModel clique(int n) {
  if (n < 2) throw BadParams("clique needs n >= 2");
  Matrix P = Matrix::Constant(n, n, 1.0 / (n - 1));
  P.diagonal().setZero();
  ChainModel chain = from_matrix(P);
  chain.source = "family";
  return chain;
}

inline ChainModel hypercube(int d) {
  if (d < 1) throw BadParams("hypercube needs d >= 1");
  if (d > 16) throw BadParams("hypercube dimension too large");
  const int n = 1 << d;
  Matrix P = Matrix::Zero(n, n);
  std::vector<std::string> labels(n);
  for (int x = 0; x < n; ++x) {
    std::string bits;
    for (int b = d - 1; b >= 0; --b) bits += ((x >> b) & 1) ? '1' : '0';
    labels[x] = bits;
    for (int b = 0; b < d; ++b) P(x, x ^ (1 << b)) = 1.0 / d;
  }
  ChainModel chain = from_matrix(P);
  chain.states = labels;
  chain.source = "family";
  return chain;
}

inline ChainModel binary_tree(int depth) {
  if (depth < 1) throw BadParams("binary_tree needs depth >= 1");
  const int n = (1 << (depth + 1)) - 1;
  WeightedNetwork net;
  for (int i = 0; i < n; ++i) net.vertices.push_back("v" + std::to_string(i));
  for (int i = 1; i < n; ++i) net.edges.push_back({net.vertices[(i - 1) / 2], net.vertices[i], 1.0});
  ChainModel chain = from_network(net);
  chain.source = "family";
  return chain;
}

// Birth-death chain from up/down probabilities; p has length n-1, q has
// length n-1 (q[i] is the down rate from state i+1), holding probability
// fills the rest of each row.
inline ChainModel birth_death(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size() || p.empty()) throw BadParams("birth_death needs |p| == |q| >= 1");
  const int n = static_cast<int>(p.size()) + 1;
  Matrix P = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    if (!(p[i] > 0.0) || !(q[i] > 0.0)) throw BadParams("birth_death rates must be positive");
    P(i, i + 1) = p[i];
    P(i + 1, i) = q[i];
  }
  for (int i = 0; i < n; ++i) {
    double stay = 1.0 - P.row(i).sum();
    if (stay < -kRowSumTol) throw BadParams("birth_death rates exceed 1 in a row");
    P(i, i) = std::max(stay, 0.0);
  }
  ChainModel chain = from_matrix(P);
  chain.source = "family";
  return chain;
}

}  // namespace families

inline ChainModel two_state() {
  Matrix P(2, 2);
  P << 0, 1, 1, 0;
  ChainModel chain = from_matrix(P);
  chain.source = "family";
  return chain;
}

inline ChainModel rescale_rows(const ChainModel& chain, const Vector& r) {
  if (r.size() != chain.n()) throw BadParams("rate vector size mismatch");
  if (r.minCoeff() <= 0.0) throw NonPositiveRate("all row factors must be positive");
  if (!chain.reversible) throw NotReversible("rescale_rows requires a reversible chain");
  if (!chain.unit_rate()) throw BadParams("rescale_rows expects a unit-rate base chain");
  ChainModel out = chain;
  out.rates = r;
  Vector scaled = chain.pi.cwiseQuotient(r);
  out.pi = scaled / scaled.sum();
  out.source = "rescale";
  detail::validate(out);
  return out;
}

// Random weighted tree used by the verification suites: topology from a
// uniform Pruefer sequence, conductances log-uniform in [wmin, wmax].
inline ChainModel random_weighted_tree(int n, double wmin, double wmax, std::mt19937_64& rng) {
  if (n < 2) throw BadParams("tree needs n >= 2");
  std::vector<std::pair<int, int>> edges;
  if (n == 2) {
    edges = {{0, 1}};
  } else {
    std::vector<int> prufer(n - 2);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (auto& p : prufer) p = pick(rng);
    std::vector<int> degree(n, 1);
    for (int p : prufer) ++degree[p];
    std::set<int> leaves;
    for (int v = 0; v < n; ++v)
      if (degree[v] == 1) leaves.insert(v);
    for (int p : prufer) {
      int leaf = *leaves.begin();
      leaves.erase(leaves.begin());
      edges.push_back({leaf, p});
      if (--degree[p] == 1) leaves.insert(p);
    }
    int a = *leaves.begin(), b = *std::next(leaves.begin());
    edges.push_back({a, b});
  }
  std::uniform_real_distribution<double> logw(std::log(wmin), std::log(wmax));
  WeightedNetwork net;
  for (int v = 0; v < n; ++v) net.vertices.push_back("v" + std::to_string(v));
  for (auto [u, v] : edges)
    net.edges.push_back({net.vertices[u], net.vertices[v], std::exp(logw(rng))});
  return from_network(net);
}

}  // namespace mixchar
