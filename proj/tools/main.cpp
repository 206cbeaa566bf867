#include <iostream>

#include "hlzero/cli.hpp"

int main(int argc, char** argv) { return hlzero::cli::run(argc, argv, std::cout, std::cerr); }
