#include <iostream>
#include <string>
#include <vector>

#include "wvp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return wvp::cli::run(args, std::cout, std::cerr);
}
