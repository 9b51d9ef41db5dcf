#include <iostream>

#include "baryfactor/cli.hpp"

int main(int argc, char** argv) {
  return baryfactor::cli::run_command(argc, argv, std::cout, std::cerr);
}
