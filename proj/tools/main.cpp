#include "rduniband/cli.hpp"

int main(int argc, char** argv) { return rdu::run_cli(argc, argv); }
