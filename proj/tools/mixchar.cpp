// mixchar: mixing-time and hitting-time characterization toolkit for
// finite reversible Markov chains.
//
//   mixchar analyze --chain FILE --quantities LIST [--out FILE]
//   mixchar verify  --chain FILE --suite NAME [--slack S] [--out FILE]
//   mixchar sweep   --family NAME --param-range A..B --quantities LIST --out CSV
//
// Exit codes: 0 pass, 1 verification failure, 2 input error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mixchar/verify.hpp"

namespace {

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream stream(csv);
  std::string item;
  while (std::getline(stream, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw mixchar::SpecParse("cannot open output file: " + path);
  out << text;
}

mixchar::ChainModel family_by_name(const std::string& name, int param) {
  using namespace mixchar::families;
  if (name == "cycle") return cycle(param);
  if (name == "path") return path(param);
  if (name == "clique") return clique(param);
  if (name == "hypercube") return hypercube(param);
  if (name == "binary_tree") return binary_tree(param);
  throw mixchar::BadParams("sweep supports cycle, path, clique, hypercube, binary_tree");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixing-time and hitting-time characterizations for finite reversible chains"};
  app.require_subcommand(1);

  std::string chain_path, out_path, quantities_csv, suite = "core";
  std::string family_name, param_range, robustness_csv_path;
  double slack = 1e-6;
  std::uint64_t seed = mixchar::kDefaultSeed;
  std::size_t max_subsets = 1000000;
  double tol = 1e-6;
  bool timings = false;

  auto* analyze_cmd = app.add_subcommand("analyze", "compute quantities for one chain");
  analyze_cmd->add_option("--chain", chain_path, "chain spec file (JSON)")->required();
  analyze_cmd->add_option("--quantities", quantities_csv, "comma-separated quantity list")
      ->required();
  analyze_cmd->add_option("--tol", tol, "generic tolerance knob recorded in the report");
  analyze_cmd->add_option("--max-subsets", max_subsets, "connected-set enumeration cap");
  analyze_cmd->add_option("--seed", seed, "optimizer seed");
  analyze_cmd->add_flag("--timings", timings,
                        "include wall-clock per quantity (breaks byte determinism)");
  analyze_cmd->add_option("--out", out_path, "output JSON file ('-' for stdout)");

  auto* verify_cmd = app.add_subcommand("verify", "run an inequality suite on one chain");
  verify_cmd->add_option("--chain", chain_path, "chain spec file (JSON)")->required();
  verify_cmd->add_option("--suite", suite, "core | discrete | trees | all")->required();
  verify_cmd->add_option("--slack", slack, "default slack for pass/fail records");
  verify_cmd->add_option("--seed", seed, "optimizer seed");
  verify_cmd->add_option("--max-subsets", max_subsets, "connected-set enumeration cap");
  verify_cmd->add_option("--robustness-csv", robustness_csv_path,
                         "write the tree perturbation experiment rows as CSV");
  verify_cmd->add_option("--out", out_path, "output JSON file ('-' for stdout)");

  auto* sweep_cmd = app.add_subcommand("sweep", "tabulate quantities across a family range");
  sweep_cmd->add_option("--family", family_name, "cycle | path | clique | hypercube | binary_tree")
      ->required();
  sweep_cmd->add_option("--param-range", param_range, "inclusive range A..B")->required();
  sweep_cmd->add_option("--quantities", quantities_csv, "comma-separated quantity list")
      ->required();
  sweep_cmd->add_option("--seed", seed, "optimizer seed");
  sweep_cmd->add_option("--out", out_path, "output CSV file ('-' for stdout)")->required();

  CLI11_PARSE(app, argc, argv);

  mixchar::VerifyConfig cfg;
  cfg.slack = slack;
  cfg.seed = seed;
  cfg.max_subsets = max_subsets;
  cfg.timings = timings;

  try {
    if (analyze_cmd->parsed()) {
      mixchar::ChainModel chain = mixchar::load_chain_spec(chain_path);
      auto report = mixchar::analyze(chain, chain_path, split_list(quantities_csv), cfg);
      report["tol"] = mixchar::detail::json_number(tol);
      write_text(out_path, report.dump(2) + "\n");
      return 0;
    }
    if (verify_cmd->parsed()) {
      mixchar::ChainModel chain = mixchar::load_chain_spec(chain_path);
      std::vector<mixchar::RobustnessRow> rows;
      auto report = mixchar::verify_report(chain, chain_path, suite, cfg, &rows);
      write_text(out_path, report.dump(2) + "\n");
      if (!robustness_csv_path.empty())
        write_text(robustness_csv_path, mixchar::robustness_csv(rows));
      return report["summary"]["fail"].get<int>() == 0 ? 0 : 1;
    }
    if (sweep_cmd->parsed()) {
      auto dots = param_range.find("..");
      if (dots == std::string::npos)
        throw mixchar::BadParams("param range must look like 3..8");
      int lo = std::stoi(param_range.substr(0, dots));
      int hi = std::stoi(param_range.substr(dots + 2));
      if (lo > hi) throw mixchar::BadParams("empty parameter range");
      auto quantities = split_list(quantities_csv);
      std::ostringstream csv;
      csv << "family,param";
      for (const auto& q : quantities) csv << ',' << q;
      csv << '\n';
      for (int p = lo; p <= hi; ++p) {
        mixchar::ChainModel chain = family_by_name(family_name, p);
        auto report = mixchar::analyze(chain, family_name + "(" + std::to_string(p) + ")",
                                       quantities, cfg);
        csv << family_name << ',' << p;
        for (const auto& q : quantities) {
          csv << ',';
          const auto& v = report["quantities"][q];
          if (v.is_number()) csv << v.get<double>();
          else csv << "NA";
        }
        csv << '\n';
      }
      write_text(out_path, csv.str());
      return 0;
    }
  } catch (const mixchar::SpecParse& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const mixchar::NotReversible& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const mixchar::Reducible& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const mixchar::BadParams& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const mixchar::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
