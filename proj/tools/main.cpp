#include "imugan/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return imugan::run_cli(argc, argv, std::cout, std::cerr); }
