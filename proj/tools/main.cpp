#include "cli.hpp"

int main(int argc, char** argv) { return sfdnn::cli::main_entry(argc, argv); }
