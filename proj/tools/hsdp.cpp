#include <iostream>

#include "hsdp/cli.hpp"

int main(int argc, char** argv) { return hsdp::cli::run(argc, argv, std::cout, std::cerr); }
