#include "qtomo/cli.hpp"

int main(int argc, char** argv) { return qtomo::run_cli(argc, argv); }
