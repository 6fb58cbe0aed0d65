#include "pdg/cli.hpp"

int main(int argc, char** argv) { return pdg::run_cli(argc, argv); }
