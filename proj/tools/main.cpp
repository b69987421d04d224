#include <iostream>
#include <string>
#include <vector>

#include "cdaug/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cdaug::cli_dispatch(args, std::cout, std::cerr);
}
