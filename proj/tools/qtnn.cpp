#include "qtnn/cli.hpp"

int main(int argc, char** argv) { return qtnn::cli::dispatch(argc, argv); }
