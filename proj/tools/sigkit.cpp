#include "sigkit/cli.hpp"

int main(int argc, char** argv) { return sigkit::run_cli(argc, argv); }
