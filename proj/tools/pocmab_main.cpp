#include "pocmab/cli.hpp"

int main(int argc, char** argv) { return pocmab::cli_main(argc, argv); }
