#include <iostream>
#include <string>
#include <vector>

#include "disf/cli.hpp"

int main(int argc, char** argv) {
  return disf::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
