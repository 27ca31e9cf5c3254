// kvqe: command-line front end for VQE experiments on periodic systems.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "kvqe/experiment.hpp"

int main(int argc, char **argv) {
  CLI::App app{"kvqe: VQE simulator for periodic systems"};
  app.require_subcommand(1);

  std::string config, in, scell, out;
  int n_states = 1;

  auto *run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config, "config file")->required();
  auto *validate = app.add_subcommand("validate", "check a config and its input files without running");
  validate->add_option("config", config, "config file")->required();
  auto *scan = app.add_subcommand("scan", "run a configured scan and write CSV rows");
  scan->add_option("config", config, "config file")->required();
  auto *k2g = app.add_subcommand("k2g", "realify a k-point PFCIDUMP with its supercell dump");
  k2g->add_option("input", in, "k-point PFCIDUMP")->required();
  k2g->add_option("supercell", scell, "supercell orbital dump")->required();
  k2g->add_option("output", out, "output PFCIDUMP")->required();
  auto *fci = app.add_subcommand("fci", "exact ground (and excited) energies of a PFCIDUMP");
  fci->add_option("input", in, "PFCIDUMP")->required();
  fci->add_option("-n,--states", n_states, "number of states")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed())
    return kvqe::run(config, std::cout, std::cerr);
  if (scan->parsed())
    return kvqe::run_scan(config, std::cout, std::cerr);
  if (k2g->parsed())
    return kvqe::run_k2g(in, scell, out, std::cout, std::cerr);
  if (fci->parsed())
    return kvqe::run_fci(in, n_states, std::cout, std::cerr);
  if (validate->parsed()) {
    const auto findings = kvqe::validate(config);
    for (const auto &f : findings)
      std::cout << f << '\n';
    if (findings.empty())
      std::cout << "ok\n";
    return 0;
  }
  return 1;
}
