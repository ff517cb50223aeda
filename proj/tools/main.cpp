#include "latticeforge/cli_io.hpp"

int main(int argc, char** argv) { return latticeforge::run_cli(argc, argv); }
