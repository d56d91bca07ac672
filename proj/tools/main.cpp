#include <iostream>
#include <string>
#include <vector>

#include "sig2sig/commands.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return sig2sig::cli::run(args, std::cout, std::cerr);
}
