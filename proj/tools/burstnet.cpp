#include <iostream>
#include <string>
#include <vector>

#include "burstnet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return burstnet::cli::run(args, std::cout, std::cerr);
}
