#include "privlens/cli/commands.hpp"

int main(int argc, char** argv) { return privlens::cli::run(argc, argv); }
