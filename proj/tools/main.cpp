#include <iostream>
#include <string>
#include <vector>

#include "spcc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return spcc::run(args, std::cout, std::cerr);
}
