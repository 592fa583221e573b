#include <iostream>

#include "pccsl/cli.hpp"

int main(int argc, char** argv) {
  return pccsl::cli::run(argc, argv, std::cout, std::cerr);
}
