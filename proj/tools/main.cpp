#include "fdb/cli.hpp"

int main(int argc, char** argv) { return fdb::cli::run(argc, argv); }
