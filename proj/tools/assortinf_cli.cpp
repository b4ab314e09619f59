#include "assortinf/cli.hpp"

int main(int argc, char** argv) {
    return assortinf::cli_main(argc, argv);
}
