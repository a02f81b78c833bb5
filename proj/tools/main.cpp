#include "cli.hpp"

int main(int argc, char** argv) { return ldplab::cli::run(argc, argv); }
