#include <iostream>

#include "robshrink/cli.hpp"

int main(int argc, char **argv) {
  return robshrink::run_cli(argc, argv, std::cout, std::cerr);
}
