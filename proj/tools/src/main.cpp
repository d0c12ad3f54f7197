#include <iostream>

#include "sparse_design_cli/cli.hpp"

int main(int argc, char** argv) {
  return sparse_design::cli::run_cli(argc, argv, std::cout, std::cerr);
}
