#include <iostream>

#include "vsloc/cli.hpp"

int main(int argc, char** argv) { return vsloc::run_cli(argc, argv, std::cout, std::cerr); }
