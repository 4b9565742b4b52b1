#include <string>
#include <vector>

#include "rulerec/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rulerec::cli::run(args);
}
