#include "hybridjump/cli.hpp"

int main(int argc, char** argv) { return hybridjump::cli::main_entry(argc, argv); }
