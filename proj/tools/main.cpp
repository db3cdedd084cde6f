#include <iostream>
#include <string>
#include <vector>

#include "stratamix/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return stratamix::cli::run(args, std::cout, std::cerr);
}
