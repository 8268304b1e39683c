#include <iostream>

#include "pbcplus/cli.hpp"

int main(int argc, char** argv) { return pbcplus::cli::run(argc, argv, std::cout, std::cerr); }
