#include <iostream>

#include "swarmraft/cli.hpp"

int main(int argc, char** argv) {
  return swarmraft::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
