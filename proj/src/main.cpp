#include "efoq/cli.hpp"

int main(int argc, char** argv) { return efoq::run_cli(argc, argv); }
