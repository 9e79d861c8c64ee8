#include <iostream>

#include "idfree/cli.hpp"

int main(int argc, char** argv) {
    return idfree::cli::run_cli(argc, argv, std::cout, std::cerr);
}
