#include <iostream>

#include "frac_cli.hpp"

int main(int argc, char** argv) { return fracforms::cli::run(argc, argv, std::cout, std::cerr); }
