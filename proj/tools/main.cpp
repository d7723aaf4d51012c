#include <iostream>

#include "stereogate/cli.hpp"

int main(int argc, char** argv) { return stereogate::cli::run(argc, argv, std::cout, std::cerr); }
