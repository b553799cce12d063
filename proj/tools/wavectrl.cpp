#include "wavectrl/cli.hpp"

int main(int argc, char** argv) { return wavectrl::cli_main(argc, argv); }
