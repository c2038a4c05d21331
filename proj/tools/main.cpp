#include "cli.hpp"

int main(int argc, char** argv) { return harvex::cli::main(argc, argv); }
