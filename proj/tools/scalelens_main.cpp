#include <iostream>

#include "scalelens/cli.hpp"

int main(int argc, char** argv) { return scalelens::cli_dispatch(argc, argv, std::cout, std::cerr); }
