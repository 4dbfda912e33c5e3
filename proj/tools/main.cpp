#include <iostream>

#include "pqflex/cli.hpp"

int main(int argc, char** argv) { return pqflex::run_cli(argc, argv, std::cout, std::cerr); }
