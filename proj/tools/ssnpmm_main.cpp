#include <iostream>

#include "ssnpmm/cli.hpp"

int main(int argc, char** argv) {
  return ssnpmm::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
