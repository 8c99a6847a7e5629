#include "fcsd/cli.hpp"

int main(int argc, char** argv) { return fcsd::cli_main(argc, argv); }
