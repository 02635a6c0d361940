#include <iostream>

#include "cptt/cli.hpp"

int main(int argc, char** argv) { return cptt::cli::run(argc, argv, std::cout, std::cerr); }
