#include "rdp/cli.hpp"

int main(int argc, char** argv) { return rdp::cli::run(argc, argv); }
