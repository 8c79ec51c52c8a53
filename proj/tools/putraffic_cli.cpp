#include "putraffic/cli.hpp"

int main(int argc, char **argv) { return putraffic::cli_main(argc, argv); }
