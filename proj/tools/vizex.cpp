#include "vizex/cli.hpp"

int main(int argc, char** argv) {
    return vizex::cli_main(argc, argv);
}
