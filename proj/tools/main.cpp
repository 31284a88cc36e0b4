#include "cli.hpp"

int main(int argc, char** argv) { return dualframe::cli::main(argc, argv); }
