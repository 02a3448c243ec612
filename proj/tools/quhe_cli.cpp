#include "quhe/cli.hpp"

int main(int argc, char** argv) { return quhe::cli::run(argc, argv); }
