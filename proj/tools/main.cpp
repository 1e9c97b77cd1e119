#include "flowbins/cli.hpp"

int main(int argc, char** argv) { return flowbins::run_cli(argc, argv); }
