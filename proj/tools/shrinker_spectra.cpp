#include "cli_app.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return shrinker::cli::main_entry(argc, argv, std::cout, std::cerr);
}
