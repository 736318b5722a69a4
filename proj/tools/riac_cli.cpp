#include "riac/cli.hpp"

int main(int argc, char** argv) { return riac::cli::run(argc, argv); }
