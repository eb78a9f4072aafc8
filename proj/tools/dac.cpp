#include <string>
#include <vector>

#include "dac/cli.hpp"

int main(int argc, char** argv) {
  return dac::cli::main(std::vector<std::string>(argv + 1, argv + argc));
}
