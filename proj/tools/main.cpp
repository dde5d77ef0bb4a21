#include "ibflow/cli.hpp"

int main(int argc, char** argv) { return ibflow::cli_main(argc, argv); }
