#include "soilrf/cli.hpp"

int main(int argc, char** argv) { return soilrf::cli::run(argc, argv); }
