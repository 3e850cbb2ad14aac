#include <iostream>

#include "contro/cli.hpp"

int main(int argc, char** argv) { return contro::run_cli(argc, argv, std::cout, std::cerr); }
