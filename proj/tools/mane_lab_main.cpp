#include "manelab/cli.hpp"

int main(int argc, char** argv) { return manelab::run_cli(argc, argv); }
