#include "npmca/cli.hpp"

int main(int argc, char** argv) { return npmca::run_cli(argc, argv); }
