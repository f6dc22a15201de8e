#include <iostream>

#include "acmptc_cli/cli.hpp"

int main(int argc, char** argv) { return acmptc::cli::run_cli(argc, argv, std::cout, std::cerr); }
