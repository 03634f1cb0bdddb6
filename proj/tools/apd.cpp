#include <iostream>

#include <string>
#include <vector>

#include "apd/cli.hpp"

int main(int argc, char** argv) {
  return apd::cli_run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
