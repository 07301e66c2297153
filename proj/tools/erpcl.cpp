#include "erpcl/cli.hpp"

int main(int argc, char** argv) { return erpcl::cli::run(argc, argv); }
