#pragma once

// Chain spec files (JSON):
//   {"type":"matrix","P":[[...],...]}
//   {"type":"network","edges":[["a","b",1.0],...]}
//   {"type":"family","name":"cycle","params":{"n":8}}
//   {"type":"rescale","base":{...},"r":[...]}

#include <fstream>

#include <json.hpp>

#include "mixchar/chain.hpp"

namespace mixchar {

namespace detail {

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline ChainModel chain_from_json(const nlohmann::json& spec);

namespace detail {

inline ChainModel family_from_json(const nlohmann::json& spec) {
  std::string name = spec.at("name").get<std::string>();
  nlohmann::json params = spec.value("params", nlohmann::json::object());
  if (name == "cycle") return families::cycle(params.at("n").get<int>());
  if (name == "path") return families::path(params.at("n").get<int>());
  if (name == "clique") return families::clique(params.at("n").get<int>());
  if (name == "hypercube") return families::hypercube(params.at("d").get<int>());
  if (name == "binary_tree") return families::binary_tree(params.at("depth").get<int>());
  if (name == "birth_death")
    return families::birth_death(params.at("p").get<std::vector<double>>(),
                                 params.at("q").get<std::vector<double>>());
  if (name == "lazy")
    return lazy(chain_from_json(params.at("base")), params.at("a").get<double>());
  throw BadParams("unknown family: " + name);
}

}  // namespace detail

inline ChainModel chain_from_json(const nlohmann::json& spec) {
  try {
    std::string type = spec.at("type").get<std::string>();
    if (type == "matrix") {
      auto rows = spec.at("P").get<std::vector<std::vector<double>>>();
      Matrix P(rows.size(), rows.empty() ? 0 : rows[0].size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) throw BadParams("P must be square");
        for (std::size_t j = 0; j < rows[i].size(); ++j) P(i, j) = rows[i][j];
      }
      return from_matrix(P);
    }
    if (type == "network") {
      WeightedNetwork net;
      std::set<std::string> seen;
      for (const auto& e : spec.at("edges")) {
        std::string u = e.at(0).get<std::string>();
        std::string v = e.at(1).get<std::string>();
        double w = e.at(2).get<double>();
        for (const auto& label : {u, v})
          if (seen.insert(label).second) net.vertices.push_back(label);
        net.edges.push_back({u, v, w});
      }
      return from_network(net);
    }
    if (type == "family") return detail::family_from_json(spec);
    if (type == "rescale") {
      ChainModel base = chain_from_json(spec.at("base"));
      auto rv = spec.at("r").get<std::vector<double>>();
      Vector r(rv.size());
      for (std::size_t i = 0; i < rv.size(); ++i) r[i] = rv[i];
      return rescale_rows(base, r);
    }
    throw SpecParse("unknown chain spec type: " + type);
  } catch (const nlohmann::json::exception& e) {
    throw SpecParse(std::string("chain spec field error: ") + e.what());
  }
}

inline ChainModel load_chain_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecParse("cannot open chain spec: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  nlohmann::json spec;
  try {
    spec = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw SpecParse("JSON parse error at line " + std::to_string(line) + ", column " +
                    std::to_string(col) + ": " + e.what());
  }
  return chain_from_json(spec);
}

}  // namespace mixchar
