#include <iostream>

#include "mmdsvr/cli.hpp"

int main(int argc, char** argv) { return mmdsvr::cli::run(argc, argv, std::cout, std::cerr); }
