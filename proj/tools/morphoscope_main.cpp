#include "morphoscope/commands.hpp"

int main(int argc, char** argv) { return morphoscope::run_cli(argc, argv); }
