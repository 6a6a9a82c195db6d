#include <iostream>

#include "r2cnet/cli.hpp"

int main(int argc, char** argv) {
  return r2c::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
