#include <iostream>

#include "csprobe/cli.hpp"

int main(int argc, char** argv) { return csprobe::cli::run(argc, argv, std::cout, std::cerr); }
