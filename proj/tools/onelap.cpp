#include "onelap/cli/commands.hpp"

int main(int argc, char** argv) { return onelap::cli::run(argc, argv); }
