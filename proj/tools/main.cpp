#include "lfsep/cli.hpp"

int main(int argc, char** argv) {
  return lfsep::cli::run(std::vector<std::string>(argv, argv + argc));
}
