#include "caah/cli/cli.hpp"

int main(int argc, char** argv) { return caah::cli::cli_main(argc, argv); }
