#include <iostream>

#include "tomosar/cli.hpp"

int main(int argc, char** argv) { return tomosar::cli::run_cli(argc, argv, std::cout, std::cerr); }
