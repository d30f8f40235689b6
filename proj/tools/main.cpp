#include <iostream>

#include "weakgordon/cli.hpp"

int main(int argc, char** argv) { return wg::cli::run(argc, argv, std::cout, std::cerr); }
