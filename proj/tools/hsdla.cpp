#include <iostream>

#include "hsdla/cli.hpp"

int main(int argc, char** argv) { return hsdla::cli::run(argc, argv, std::cout, std::cerr); }
