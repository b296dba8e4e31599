#include "tailcast/cli.hpp"

int main(int argc, char** argv) { return tailcast::cli::run(argc, argv); }
