#include "cli.hpp"

int main(int argc, char** argv) { return ssmreduce::cli::run(argc, argv); }
