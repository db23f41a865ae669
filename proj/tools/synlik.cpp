#include "synlik/cli.hpp"

int main(int argc, char** argv) { return synlik::cli::run(argc, argv); }
