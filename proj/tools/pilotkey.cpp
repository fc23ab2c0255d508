#include <iostream>
#include <string>
#include <vector>

#include "pilotkey/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return pilotkey::run_cli(args, std::cout, std::cerr);
}
