#include "bayescreen/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return bayescreen::run_cli(argc, argv, std::cout, std::cerr);
}
