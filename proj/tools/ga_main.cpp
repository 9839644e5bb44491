#include <string>
#include <vector>

#include "ga/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ga::cli::run(args);
}
