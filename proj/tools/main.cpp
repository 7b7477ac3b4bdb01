#include "ewpf/cli.hpp"

int main(int argc, char** argv) { return ewpf::cli_main(argc, argv); }
