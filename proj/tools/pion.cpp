#include <iostream>

#include "pion/cli.hpp"

int main(int argc, char** argv) {
  return pion::cli::cli_main(argc, argv, std::cout, std::cerr);
}
