#include "bfseg/cli.hpp"

int main(int argc, char** argv) { return bfseg::cli::dispatch(argc, argv); }
