#pragma once

// The standard chain corpus used by the verification suites: cycles,
// paths, cliques, hypercubes, binary trees, and seeded random weighted
// trees with log-uniform conductances.

#include "mixchar/chain.hpp"

namespace mixchar {

struct SuiteChain {
  std::string id;
  ChainModel chain;
  bool is_tree = false;
};

inline std::vector<SuiteChain> standard_suite(std::uint64_t seed = kDefaultSeed) {
  std::vector<SuiteChain> out;
  out.push_back({"two_state", two_state(), true});
  for (int n = 3; n <= 10; ++n)
    out.push_back({"cycle(" + std::to_string(n) + ")", families::cycle(n), false});
  for (int n = 2; n <= 10; ++n)
    out.push_back({"path(" + std::to_string(n) + ")", families::path(n), true});
  for (int n = 3; n <= 8; ++n)
    out.push_back({"clique(" + std::to_string(n) + ")", families::clique(n), false});
  for (int d = 2; d <= 4; ++d)
    out.push_back({"hypercube(" + std::to_string(d) + ")", families::hypercube(d), false});
  for (int depth = 1; depth <= 3; ++depth)
    out.push_back({"binary_tree(" + std::to_string(depth) + ")", families::binary_tree(depth), true});
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(4, 10);
  for (int k = 0; k < 20; ++k) {
    int n = size(rng);
    out.push_back({"random_tree_" + std::to_string(k) + "(n=" + std::to_string(n) + ")",
                   random_weighted_tree(n, 0.25, 4.0, rng), true});
  }
  return out;
}

// Smaller corpus for the quick checks.
inline std::vector<SuiteChain> small_suite(std::uint64_t seed = kDefaultSeed) {
  std::vector<SuiteChain> out;
  out.push_back({"two_state", two_state(), true});
  out.push_back({"path(3)", families::path(3), true});
  out.push_back({"cycle(5)", families::cycle(5), false});
  out.push_back({"clique(4)", families::clique(4), false});
  out.push_back({"hypercube(2)", families::hypercube(2), false});
  out.push_back({"binary_tree(2)", families::binary_tree(2), true});
  std::mt19937_64 rng(seed);
  out.push_back({"random_tree(n=7)", random_weighted_tree(7, 0.25, 4.0, rng), true});
  return out;
}

}  // namespace mixchar
