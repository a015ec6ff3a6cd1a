#include <iostream>

#include "tascom/cli.hpp"

int main(int argc, char** argv) { return tascom::run_cli(argc, argv, std::cout, std::cerr); }
