#include "farkas/cli.hpp"

int main(int argc, char** argv) { return farkas::cli::main(argc, argv); }
