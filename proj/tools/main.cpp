#include "cli.hpp"

int main(int argc, char** argv) { return vpsfem::cli::run_cli(argc, argv); }
