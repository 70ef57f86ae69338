#include <iostream>
#include <string>
#include <vector>

#include "fwc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fwc::main_with_args(args, std::cout, std::cerr);
}
