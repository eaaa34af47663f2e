#include "mcev_cli.hpp"

int main(int argc, char** argv) { return mcev::cli::run_cli(argc, argv); }
