#include "mdcs/cli.hpp"

int main(int argc, char** argv) { return mdcs::run_cli(argc, argv); }
