#include "mobifair/cli.hpp"

int main(int argc, char** argv) { return mobifair::cli_main(argc, argv); }
