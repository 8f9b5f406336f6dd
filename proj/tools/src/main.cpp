#include <iostream>

#include "qdforge_cli/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return qdforge::cli::run(args, std::cout, std::cerr);
}
