#include <iostream>

#include "rdl/cli.hpp"

int main(int argc, char** argv) { return rdl::run_cli(argc, argv, std::cout, std::cerr); }
