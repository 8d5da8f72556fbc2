#include <iostream>

#include "tdsim/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tdsim::parse_and_dispatch(args, std::cout, std::cerr);
}
