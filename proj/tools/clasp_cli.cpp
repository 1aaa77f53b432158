#include <iostream>

#include "clasp/interface/cli.hpp"

int main(int argc, char** argv) {
  return clasp::interface::cli_main(argc, argv, std::cout, std::cerr);
}
