#include "bcs/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return bcs::cli::run(argc, argv, std::cout, std::cerr); }
