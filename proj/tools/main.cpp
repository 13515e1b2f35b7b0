#include "commands.hpp"

int main(int argc, char** argv) {
    return relclust::cli::run(argc, argv);
}
