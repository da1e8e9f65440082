#include <iostream>
#include <string>
#include <vector>

#include "dentocc/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dentocc::run_cli(args, std::cout, std::cerr);
}
