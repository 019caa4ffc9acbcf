#include "hypergcl/cli.hpp"

int main(int argc, char** argv) { return hypergcl::cli::run(argc, argv); }
