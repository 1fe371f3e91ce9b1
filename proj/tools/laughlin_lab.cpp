#include "laughlin/cli.hpp"

int main(int argc, char** argv) { return laughlin::cli::dispatch(argc, argv); }
