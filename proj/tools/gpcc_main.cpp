#include "gpcc/cli.hpp"

int main(int argc, char** argv) { return gpcc::run_cli(argc, argv); }
