#include "spikestream/cli.hpp"

int main(int argc, char** argv) { return spikestream::cli::run(argc, argv); }
