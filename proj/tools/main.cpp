#include "cli.hpp"

int main(int argc, char** argv) { return citeidx::cli::run(argc, argv); }
