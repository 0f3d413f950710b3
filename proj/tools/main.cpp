#include "qemine/cli.hpp"

int main(int argc, char** argv) { return qemine::cli::dispatch(argc, argv); }
