#include "lfmix/cli.hpp"

int main(int argc, char** argv) { return lfmix::cli::main(argc, argv); }
