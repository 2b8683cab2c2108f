#include "imbf/cli.hpp"

int main(int argc, char** argv) { return imbf::cli::run(argc, argv); }
