#include <iostream>

#include "sgeit/cli.h"

int main(int argc, char** argv) { return sgeit::run_cli(argc, argv, std::cout, std::cerr); }
