#include "volclass/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return volclass::cli::run(argc, argv, std::cout, std::cerr);
}
