#include "gradforge/cli.hpp"

int main(int argc, char** argv) { return gradforge::run_cli(argc, argv); }
