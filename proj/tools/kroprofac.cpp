#include <iostream>
#include <string>
#include <vector>

#include "kpf/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return kpf::run_cli(args, std::cout, std::cerr);
}
