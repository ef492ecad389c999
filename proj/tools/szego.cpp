#include "szego/cli/app.hpp"

int main(int argc, char** argv) { return szego::cli::run_cli(argc, argv); }
