#include <vector>
#include <string>

#include "vkd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vkd::cli::dispatch(args);
}
