#include <iostream>

#include "roa/cli.hpp"

int main(int argc, char** argv) { return roa::cli_main(argc, argv, std::cout, std::cerr); }
