#include <string>
#include <vector>

#include "paa/io.hpp"

int main(int argc, char** argv) {
    return paa::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
