#include <iostream>

#include "grouptrack/cli.hpp"

int main(int argc, char** argv) {
  return grouptrack::cli::main_entry(argc, argv, std::cout, std::cerr);
}
