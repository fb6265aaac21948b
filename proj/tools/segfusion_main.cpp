#include <iostream>
#include <string>
#include <vector>

#include "segfusion/cli.hpp"

int main(int argc, char** argv) {
  return segfusion::cli::run(std::vector<std::string>(argv, argv + argc),
                             std::cout, std::cerr);
}
