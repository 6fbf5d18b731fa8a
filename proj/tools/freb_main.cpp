#include "freb/cli.hpp"

int main(int argc, char** argv) { return freb::cli::run(argc, argv); }
