#include <string>
#include <vector>

#include "afmvc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return afmvc::run_cli(args);
}
