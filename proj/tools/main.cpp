#include "emogait/cli.hpp"

int main(int argc, char** argv) { return emogait::cli::run(argc, argv); }
