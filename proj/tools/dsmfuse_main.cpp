#include <iostream>
#include <string>
#include <vector>

#include "dsmfuse/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dsmfuse::cli::run(args, std::cout, std::cerr);
}
