#include "regibox/cli.hpp"

int main(int argc, char** argv) {
    return regibox::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
