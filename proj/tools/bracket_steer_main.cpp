#include <iostream>
#include <string>
#include <vector>

#include "bracket_steer/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return bracket_steer::cli::run_cli(args, std::cout, std::cerr);
}
