#include <iostream>

#include "fragopt/cli.hpp"

int main(int argc, char** argv) { return fragopt::run_cli(argc, argv, std::cout, std::cerr); }
