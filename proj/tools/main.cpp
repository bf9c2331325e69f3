#include <iostream>

#include "hvcm/cli.hpp"

int main(int argc, char** argv) { return hvcm::run_subcommand(argc, argv, std::cout, std::cerr); }
