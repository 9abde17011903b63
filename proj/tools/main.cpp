#include <iostream>

#include "edgeloc/cli.hpp"

int main(int argc, char** argv) { return edgeloc::runCli(argc, argv, std::cout, std::cerr); }
