#include "gile/cli.hpp"

int main(int argc, char** argv) { return gile::cli_main(argc, argv); }
