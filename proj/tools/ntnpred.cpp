#include "ntnpred/cli.hpp"

int main(int argc, char** argv) { return ntnpred::run_cli(argc, argv); }
