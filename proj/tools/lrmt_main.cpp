#include "lrmt/cli/pipeline.hpp"

int main(int argc, char** argv) { return lrmt::cli::run(argc, argv); }
