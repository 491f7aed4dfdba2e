#include <iostream>

#include "gbs/cli.hpp"

int main(int argc, char** argv) { return gbs::run(argc, argv, std::cout, std::cerr); }
