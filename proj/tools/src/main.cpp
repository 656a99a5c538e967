#include "ghsel_cli/cli.hpp"

int main(int argc, char** argv) { return ghsel::cli::run(argc, argv); }
