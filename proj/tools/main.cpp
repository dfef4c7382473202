#include "sgdchain/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sgdchain::run_cli(argc, argv, std::cout, std::cerr); }
