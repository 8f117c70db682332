#include <iostream>

#include "attentrack/cli.hpp"

int main(int argc, char** argv) { return attentrack::cli::run(argc, argv, std::cout, std::cerr); }
