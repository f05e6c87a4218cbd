#include <iostream>
#include <string>
#include <vector>

#include "gatedclip/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return gatedclip::cli::parse_and_dispatch(args, std::cout, std::cerr);
}
