#include <iostream>

#include "vcc/cli.hpp"

int main(int argc, char** argv) {
  return vcc::cli::run(argc, argv, std::cout, std::cerr);
}
