#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return dgfl::cli::run_cli(argc, argv, std::cout, std::cerr); }
