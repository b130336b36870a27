#include "editgloss/cli.hpp"

int main(int argc, char** argv) { return editgloss::cli::main(argc, argv); }
