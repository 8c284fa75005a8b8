#include <iostream>

#include "repcalc/cli.hpp"

int main(int argc, char** argv) { return repcalc::run_cli(argc, argv, std::cout, std::cerr); }
