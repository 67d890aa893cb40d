#include <iostream>

#include "focusforge/cli.hpp"

int main(int argc, char** argv) { return focusforge::cli::run(argc, argv, std::cout, std::cerr); }
