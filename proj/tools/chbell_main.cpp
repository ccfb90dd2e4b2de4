#include <iostream>

#include "chbell/cli.hpp"

int main(int argc, char** argv) { return chbell::run_cli(argc, argv, std::cout, std::cerr); }
