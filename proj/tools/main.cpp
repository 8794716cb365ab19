#include "mhplan/cli.hpp"

int main(int argc, char **argv) { return mhplan::cli::run(argc, argv); }
